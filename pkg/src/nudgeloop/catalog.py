"""Message catalog: mood-bucket routing and same-day no-repeat selection.

The shipped corpus lives in data/messages.json and can be swapped for another
file of the same shape without a rebuild. Encouraging and affirming messages
are split by mood bucket; informing messages apply to any mood.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .mdp import AFFIRMING, ContractViolation, ENCOURAGING, INFORMING, NO_MESSAGE, StateVector

POSITIVE_NEUTRAL = "positive_neutral"
NEGATIVE_NEUTRAL = "negative_neutral"
MOOD_UNAVAILABLE = "mood_unavailable"
ANY_BUCKET = "any"

MOOD_BUCKETS = (POSITIVE_NEUTRAL, NEGATIVE_NEUTRAL, MOOD_UNAVAILABLE)
CATEGORIES = ("encouraging", "informing", "affirming")
CATEGORY_FOR_ACTION = {ENCOURAGING: "encouraging", INFORMING: "informing", AFFIRMING: "affirming"}


class CatalogError(ValueError):
    pass


class CatalogExhausted(RuntimeError):
    """Every eligible message was already sent today; caller sends nothing."""


@dataclass(frozen=True)
class MessageEntry:
    message_id: str
    category: str
    bucket: str
    text: str

    def __post_init__(self):
        if not self.message_id or not self.text:
            raise CatalogError("message needs an id and text")
        if self.category not in CATEGORIES:
            raise CatalogError(f"unknown category {self.category!r}")
        if self.category == "informing":
            if self.bucket != ANY_BUCKET:
                raise CatalogError(f"{self.message_id}: informing messages use bucket 'any'")
        elif self.bucket not in MOOD_BUCKETS:
            raise CatalogError(
                f"{self.message_id}: {self.category} messages need a specific mood bucket"
            )

    def to_dict(self) -> dict:
        return {
            "id": self.message_id,
            "category": self.category,
            "bucket": self.bucket,
            "text": self.text,
        }


@dataclass(frozen=True)
class MoodConfig:
    """How a state maps to a mood bucket.

    The positive threshold anchors to the rating bands: >= 5 counts as
    positive. The driving value is the latest rating entered today; set
    source="median" to use the day's median instead.
    """

    positive_threshold: int = 5
    source: str = "latest_rating"

    def __post_init__(self):
        if not 1 <= self.positive_threshold <= 7:
            raise CatalogError("positive_threshold must be within the 1..7 scale")
        if self.source not in ("latest_rating", "median"):
            raise CatalogError(f"unknown mood source {self.source!r}")


def mood_bucket(
    s: StateVector, latest_rating: int | None = None, cfg: MoodConfig | None = None
) -> str:
    """No rating yet today -> mood_unavailable; otherwise threshold on the
    latest rating (or the median, if the state's companion value is absent)."""
    cfg = cfg or MoodConfig()
    if s.ratings_today == 0:
        return MOOD_UNAVAILABLE
    if cfg.source == "latest_rating" and latest_rating is not None:
        value = float(latest_rating)
    else:
        value = s.median_rating
    return POSITIVE_NEUTRAL if value >= cfg.positive_threshold else NEGATIVE_NEUTRAL


class Catalog:
    def __init__(self, entries: list[MessageEntry]):
        if not entries:
            raise CatalogError("catalog is empty")
        self.entries = list(entries)
        self.by_id = {}
        for e in self.entries:
            if e.message_id in self.by_id:
                raise CatalogError(f"duplicate message id {e.message_id}")
            self.by_id[e.message_id] = e

    @classmethod
    def from_file(cls, path: str | Path) -> "Catalog":
        with open(path, encoding="utf-8") as fh:
            return cls._from_payload(json.load(fh), str(path))

    @classmethod
    def default(cls) -> "Catalog":
        ref = resources.files("nudgeloop.data").joinpath("messages.json")
        return cls._from_payload(json.loads(ref.read_text(encoding="utf-8")), "packaged")

    @classmethod
    def _from_payload(cls, payload: dict, origin: str) -> "Catalog":
        if payload.get("format") != "nudgeloop-catalog":
            raise CatalogError(f"{origin}: not a catalog file")
        entries = [
            MessageEntry(
                message_id=m["id"], category=m["category"], bucket=m["bucket"], text=m["text"]
            )
            for m in payload["messages"]
        ]
        return cls(entries)

    def counts(self) -> dict[tuple[str, str], int]:
        out: dict[tuple[str, str], int] = {}
        for e in self.entries:
            key = (e.category, e.bucket)
            out[key] = out.get(key, 0) + 1
        return out

    def eligible(self, action: int, bucket: str) -> list[MessageEntry]:
        """Catalog entries matching the action's category and the bucket
        (bucket-specific or any), de-duplicated by text within the set."""
        if bucket not in MOOD_BUCKETS:
            raise CatalogError(f"unknown mood bucket {bucket!r}")
        category = CATEGORY_FOR_ACTION.get(action)
        if category is None:
            raise ContractViolation(f"no message category for action {action}")
        seen_texts = set()
        out = []
        for e in self.entries:
            if e.category != category or e.bucket not in (bucket, ANY_BUCKET):
                continue
            if e.text in seen_texts:
                continue
            seen_texts.add(e.text)
            out.append(e)
        return out


def select_message(
    catalog: Catalog,
    action: int,
    bucket: str,
    sent_today: set[str],
    rng: np.random.Generator,
) -> MessageEntry | None:
    """Uniform draw over eligible entries not yet sent today.

    Action 0 returns None by definition. An exhausted pool raises
    CatalogExhausted; the caller degrades to sending nothing and logs it.
    """
    if action == NO_MESSAGE:
        return None
    pool = [e for e in catalog.eligible(action, bucket) if e.message_id not in sent_today]
    if not pool:
        raise CatalogExhausted(f"no unsent messages for action {action}, bucket {bucket}")
    return pool[int(rng.integers(len(pool)))]
