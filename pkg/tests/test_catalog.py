"""Catalog corpus shape, mood routing, and no-repeat selection."""

import json

import numpy as np
import pytest

from conftest import state_from_ratings
from nudgeloop.catalog import (
    ANY_BUCKET,
    Catalog,
    CatalogError,
    CatalogExhausted,
    MOOD_UNAVAILABLE,
    MessageEntry,
    MoodConfig,
    NEGATIVE_NEUTRAL,
    POSITIVE_NEUTRAL,
    mood_bucket,
    select_message,
)
from nudgeloop.mdp import AFFIRMING, ContractViolation, ENCOURAGING, INFORMING, NO_MESSAGE

EXPECTED_COUNTS = {
    ("encouraging", POSITIVE_NEUTRAL): 3,
    ("encouraging", NEGATIVE_NEUTRAL): 3,
    ("encouraging", MOOD_UNAVAILABLE): 4,
    ("informing", ANY_BUCKET): 9,
    ("affirming", POSITIVE_NEUTRAL): 3,
    ("affirming", NEGATIVE_NEUTRAL): 5,
    ("affirming", MOOD_UNAVAILABLE): 7,
}


@pytest.fixture(scope="module")
def catalog():
    return Catalog.default()


class TestCorpus:
    def test_counts_per_category_bucket(self, catalog):
        assert catalog.counts() == EXPECTED_COUNTS

    def test_total_size(self, catalog):
        assert len(catalog.entries) == sum(EXPECTED_COUNTS.values()) == 34

    def test_unique_ids(self, catalog):
        assert len(catalog.by_id) == len(catalog.entries)

    def test_bucket_discipline(self, catalog):
        for e in catalog.entries:
            if e.category == "informing":
                assert e.bucket == ANY_BUCKET
            else:
                assert e.bucket in (POSITIVE_NEUTRAL, NEGATIVE_NEUTRAL, MOOD_UNAVAILABLE)

    def test_no_duplicate_texts_within_any_eligible_set(self, catalog):
        for action in (ENCOURAGING, INFORMING, AFFIRMING):
            for bucket in (POSITIVE_NEUTRAL, NEGATIVE_NEUTRAL, MOOD_UNAVAILABLE):
                pool = catalog.eligible(action, bucket)
                texts = [e.text for e in pool]
                assert len(texts) == len(set(texts))

    def test_packaged_file_matches_default(self, catalog, tmp_path):
        # default() and from_file() on the same payload agree entry for entry
        payload = {
            "format": "nudgeloop-catalog",
            "messages": [e.to_dict() for e in catalog.entries],
        }
        path = tmp_path / "messages.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        reloaded = Catalog.from_file(path)
        assert [e.to_dict() for e in reloaded.entries] == [e.to_dict() for e in catalog.entries]


class TestMessageEntry:
    def test_missing_id(self):
        with pytest.raises(CatalogError):
            MessageEntry(message_id="", category="informing", bucket=ANY_BUCKET, text="hi")

    def test_missing_text(self):
        with pytest.raises(CatalogError):
            MessageEntry(message_id="m1", category="informing", bucket=ANY_BUCKET, text="")

    def test_unknown_category(self):
        with pytest.raises(CatalogError):
            MessageEntry(message_id="m1", category="nagging", bucket=ANY_BUCKET, text="hi")

    def test_informing_requires_any(self):
        with pytest.raises(CatalogError):
            MessageEntry(message_id="m1", category="informing", bucket=POSITIVE_NEUTRAL, text="hi")

    def test_encouraging_rejects_any(self):
        with pytest.raises(CatalogError):
            MessageEntry(message_id="m1", category="encouraging", bucket=ANY_BUCKET, text="hi")

    def test_affirming_rejects_unknown_bucket(self):
        with pytest.raises(CatalogError):
            MessageEntry(message_id="m1", category="affirming", bucket="cheerful", text="hi")

    def test_round_trip(self):
        e = MessageEntry(message_id="m1", category="affirming", bucket=POSITIVE_NEUTRAL, text="hi")
        assert e.to_dict() == {
            "id": "m1",
            "category": "affirming",
            "bucket": POSITIVE_NEUTRAL,
            "text": "hi",
        }


class TestCatalogLoad:
    def test_empty_catalog_rejected(self):
        with pytest.raises(CatalogError):
            Catalog([])

    def test_duplicate_id_rejected(self):
        e = MessageEntry(message_id="m1", category="informing", bucket=ANY_BUCKET, text="a")
        f = MessageEntry(message_id="m1", category="informing", bucket=ANY_BUCKET, text="b")
        with pytest.raises(CatalogError):
            Catalog([e, f])

    def test_wrong_format_marker(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format": "something-else", "messages": []}))
        with pytest.raises(CatalogError):
            Catalog.from_file(path)


class TestMoodBucket:
    def test_no_rating_today_is_unavailable(self):
        s = state_from_ratings(day_part=1, ratings=())
        assert mood_bucket(s) == MOOD_UNAVAILABLE

    def test_latest_six_is_positive(self):
        s = state_from_ratings(day_part=1, ratings=(3, 6))
        assert mood_bucket(s, latest_rating=6) == POSITIVE_NEUTRAL

    def test_latest_two_is_negative(self):
        s = state_from_ratings(day_part=1, ratings=(5, 2))
        assert mood_bucket(s, latest_rating=2) == NEGATIVE_NEUTRAL

    def test_threshold_boundary(self):
        s = state_from_ratings(day_part=0, ratings=(5,))
        assert mood_bucket(s, latest_rating=5) == POSITIVE_NEUTRAL
        s = state_from_ratings(day_part=0, ratings=(4,))
        assert mood_bucket(s, latest_rating=4) == NEGATIVE_NEUTRAL

    def test_threshold_configurable(self):
        cfg = MoodConfig(positive_threshold=3)
        s = state_from_ratings(day_part=0, ratings=(3,))
        assert mood_bucket(s, latest_rating=3, cfg=cfg) == POSITIVE_NEUTRAL
        s = state_from_ratings(day_part=0, ratings=(2,))
        assert mood_bucket(s, latest_rating=2, cfg=cfg) == NEGATIVE_NEUTRAL

    def test_median_source_ignores_latest(self):
        cfg = MoodConfig(source="median")
        s = state_from_ratings(day_part=2, ratings=(2, 3, 7))  # median 3
        assert mood_bucket(s, latest_rating=7, cfg=cfg) == NEGATIVE_NEUTRAL

    def test_missing_latest_falls_back_to_median(self):
        s = state_from_ratings(day_part=2, ratings=(6, 6, 7))  # median 6
        assert mood_bucket(s, latest_rating=None) == POSITIVE_NEUTRAL

    @pytest.mark.parametrize("threshold", [0, 8, -1])
    def test_bad_threshold(self, threshold):
        with pytest.raises(CatalogError):
            MoodConfig(positive_threshold=threshold)

    def test_bad_source(self):
        with pytest.raises(CatalogError):
            MoodConfig(source="astrology")


class TestEligible:
    def test_positive_encouraging_pool(self, catalog):
        pool = catalog.eligible(ENCOURAGING, POSITIVE_NEUTRAL)
        assert len(pool) == 3
        assert all(e.category == "encouraging" for e in pool)
        assert all(e.bucket == POSITIVE_NEUTRAL for e in pool)

    def test_informing_pool_same_for_every_bucket(self, catalog):
        pools = [
            [e.message_id for e in catalog.eligible(INFORMING, b)]
            for b in (POSITIVE_NEUTRAL, NEGATIVE_NEUTRAL, MOOD_UNAVAILABLE)
        ]
        assert pools[0] == pools[1] == pools[2]
        assert len(pools[0]) == 9

    def test_affirming_unavailable_pool(self, catalog):
        pool = catalog.eligible(AFFIRMING, MOOD_UNAVAILABLE)
        assert len(pool) == 7

    def test_unknown_bucket(self, catalog):
        with pytest.raises(CatalogError):
            catalog.eligible(ENCOURAGING, "any")  # "any" is not a mood

    def test_no_category_for_action(self, catalog):
        with pytest.raises(ContractViolation):
            catalog.eligible(NO_MESSAGE, POSITIVE_NEUTRAL)
        with pytest.raises(ContractViolation):
            catalog.eligible(7, POSITIVE_NEUTRAL)

    def test_duplicate_texts_collapse_within_one_set(self):
        entries = [
            MessageEntry(message_id="i1", category="informing", bucket=ANY_BUCKET, text="same"),
            MessageEntry(message_id="i2", category="informing", bucket=ANY_BUCKET, text="same"),
            MessageEntry(message_id="i3", category="informing", bucket=ANY_BUCKET, text="other"),
        ]
        pool = Catalog(entries).eligible(INFORMING, POSITIVE_NEUTRAL)
        assert [e.message_id for e in pool] == ["i1", "i3"]


class TestSelectMessage:
    def test_action_zero_is_none(self, catalog, rng):
        assert select_message(catalog, NO_MESSAGE, POSITIVE_NEUTRAL, set(), rng) is None

    def test_single_remaining_informing_entry(self, catalog, rng):
        pool_ids = [e.message_id for e in catalog.eligible(INFORMING, MOOD_UNAVAILABLE)]
        assert len(pool_ids) == 9
        for held_out in pool_ids:
            sent = set(pool_ids) - {held_out}
            picked = select_message(catalog, INFORMING, MOOD_UNAVAILABLE, sent, rng)
            assert picked.message_id == held_out

    def test_uniform_over_positive_encouraging(self, catalog):
        rng = np.random.default_rng(5)
        counts = {}
        for _ in range(6000):
            e = select_message(catalog, ENCOURAGING, POSITIVE_NEUTRAL, set(), rng)
            counts[e.message_id] = counts.get(e.message_id, 0) + 1
        assert len(counts) == 3
        for n in counts.values():
            assert 1800 <= n <= 2200

    def test_exhausted_pool(self, catalog, rng):
        sent = {e.message_id for e in catalog.eligible(ENCOURAGING, POSITIVE_NEUTRAL)}
        with pytest.raises(CatalogExhausted):
            select_message(catalog, ENCOURAGING, POSITIVE_NEUTRAL, sent, rng)

    def test_sent_elsewhere_does_not_block(self, catalog, rng):
        # messages sent from other categories leave the pool untouched
        sent = {e.message_id for e in catalog.eligible(INFORMING, POSITIVE_NEUTRAL)}
        picked = select_message(catalog, ENCOURAGING, POSITIVE_NEUTRAL, sent, rng)
        assert picked.category == "encouraging"

    def test_bucket_never_conflicts(self, catalog):
        rng = np.random.default_rng(11)
        for action in (ENCOURAGING, INFORMING, AFFIRMING):
            for bucket in (POSITIVE_NEUTRAL, NEGATIVE_NEUTRAL, MOOD_UNAVAILABLE):
                for _ in range(50):
                    e = select_message(catalog, action, bucket, set(), rng)
                    assert e.bucket in (bucket, ANY_BUCKET)

    def test_deterministic_under_seed(self, catalog):
        picks = []
        for _ in range(2):
            rng = np.random.default_rng(99)
            picks.append(
                [
                    select_message(catalog, AFFIRMING, NEGATIVE_NEUTRAL, set(), rng).message_id
                    for _ in range(40)
                ]
            )
        assert picks[0] == picks[1]
