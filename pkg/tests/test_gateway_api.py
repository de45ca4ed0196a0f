"""Service gateway and its HTTP surface."""

import pytest
from fastapi.testclient import TestClient

from nudgeloop.api import create_app
from nudgeloop.config import AppConfig
from nudgeloop.gateway import ApiError, ServiceGateway
from nudgeloop.timebase import ts_at

START = "2026-01-05"


def make_gateway(tmp_path, **overrides):
    cfg = AppConfig(data_dir=str(tmp_path / "data"), start_date=START, seed=11, **overrides)
    return ServiceGateway(cfg)


def advance(gw, day, hms):
    gw.clock.advance_to(ts_at(START, day, hms))
    return gw.tick()


def run_days(gw, client, last_day, raters=(), readers=()):
    """Walk whole days on the virtual clock with simple participant behavior."""
    for day in range(last_day + 1):
        for hms in ("10:00:00", "14:00:00", "21:00:00"):
            advance(gw, day, hms)
            gw.clock.advance_minutes(1)
            for u in raters:
                client.post("/events/rating", json={"user_id": u, "value": 6})
            for u in readers:
                for item in client.get(f"/inbox/{u}").json():
                    if not item["read"]:
                        client.post(
                            "/events/message-read",
                            json={"user_id": u, "message_id": item["message_id"]},
                        )
        advance(gw, day, "23:59:00")


@pytest.fixture()
def fresh(tmp_path):
    gw = make_gateway(tmp_path)
    client = TestClient(create_app(gw))
    yield gw, client
    gw.close()


@pytest.fixture(scope="module")
def driven(tmp_path_factory):
    """Three users walked through nine full days; p1/p2 engage, p3 never does."""
    tmp = tmp_path_factory.mktemp("driven")
    gw = make_gateway(tmp)
    client = TestClient(create_app(gw))
    for u in ("p1", "p2", "p3"):
        client.post("/users", json={"user_id": u})
    run_days(gw, client, 8, raters=("p1", "p2"), readers=("p1", "p2"))
    yield gw, client
    gw.close()


class TestUsers:
    def test_register_and_duplicate(self, fresh):
        _, client = fresh
        r = client.post("/users", json={"user_id": "alice"})
        assert r.status_code == 200 and r.json() == {"user_id": "alice", "created": True}
        r = client.post("/users", json={"user_id": "alice"})
        assert r.json()["created"] is False

    def test_invalid_id(self, fresh):
        _, client = fresh
        r = client.post("/users", json={"user_id": "has space"})
        assert r.status_code == 400
        assert r.json()["error"]["code"] == "VALIDATION"

    def test_missing_body_field(self, fresh):
        _, client = fresh
        r = client.post("/users", json={})
        assert r.status_code == 422
        assert r.json()["error"]["code"] == "VALIDATION"


class TestRatings:
    def test_unknown_user(self, fresh):
        _, client = fresh
        r = client.post("/events/rating", json={"user_id": "ghost", "value": 5})
        assert r.status_code == 404
        assert r.json()["error"]["code"] == "UNKNOWN_USER"

    @pytest.mark.parametrize("value", [0, 8, -3])
    def test_out_of_range(self, fresh, value):
        _, client = fresh
        client.post("/users", json={"user_id": "u"})
        r = client.post("/events/rating", json={"user_id": "u", "value": value})
        assert r.status_code == 400
        assert r.json()["error"]["code"] == "OUT_OF_RANGE"

    def test_non_integer_rejected(self, fresh):
        _, client = fresh
        client.post("/users", json={"user_id": "u"})
        r = client.post("/events/rating", json={"user_id": "u", "value": 5.5})
        assert r.status_code == 422

    def test_accepted_and_idempotent(self, fresh):
        gw, client = fresh
        client.post("/users", json={"user_id": "u"})
        body = {"user_id": "u", "value": 6, "ts": ts_at(START, 0, "10:05:00")}
        first = client.post("/events/rating", json=body).json()
        again = client.post("/events/rating", json=body).json()
        assert first["duplicate"] is False
        assert again["duplicate"] is True
        assert again["event_id"] == first["event_id"]
        assert len(gw.events.for_user("u")) == 1


class TestReadReceipts:
    def test_never_sent(self, fresh):
        _, client = fresh
        client.post("/users", json={"user_id": "u"})
        r = client.post("/events/message-read", json={"user_id": "u", "message_id": "inf-1"})
        assert r.status_code == 404
        assert r.json()["error"]["code"] == "UNKNOWN_MESSAGE"

    def test_inbox_read_flow(self, fresh):
        gw, client = fresh
        client.post("/users", json={"user_id": "u"})
        day = 0
        while not any(
            i for i in client.get("/inbox/u").json()
        ):  # explore until something is sent
            for hms in ("10:00:00", "14:00:00", "21:00:00"):
                advance(gw, day, hms)
            day += 1
        items = client.get("/inbox/u").json()
        assert all(not i["read"] for i in items)
        target = items[0]
        gw.clock.advance_minutes(3)
        r = client.post(
            "/events/message-read", json={"user_id": "u", "message_id": target["message_id"]}
        )
        assert r.status_code == 200 and r.json()["duplicate"] is False
        refreshed = client.get("/inbox/u").json()
        flags = {i["message_id"]: i["read"] for i in refreshed}
        assert flags[target["message_id"]] is True

    def test_inbox_unknown_user(self, fresh):
        _, client = fresh
        assert client.get("/inbox/nobody").status_code == 404


class TestDecisionsEndpoint:
    def test_shape(self, driven):
        _, client = driven
        rows = client.get("/decisions/p1").json()
        assert len(rows) == 27  # 9 days x 3 dayparts
        sample = rows[0]
        assert {"user_id", "day", "daypart", "ts", "action", "message", "policy_version"} <= set(
            sample
        )

    def test_unknown_user(self, driven):
        _, client = driven
        assert client.get("/decisions/nobody").status_code == 404


class TestMetricsEndpoint:
    def test_days_default_tracks_clock(self, driven):
        gw, client = driven
        body = client.get("/metrics").json()
        assert body["days"] == 9
        assert body["users"] == ["p1", "p2", "p3"]

    def test_days_override(self, driven):
        _, client = driven
        body = client.get("/metrics?days=3").json()
        assert body["days"] == 3
        assert len(body["action_distribution"]["per_day"]) == 3

    def test_action_counts_complete(self, driven):
        _, client = driven
        body = client.get("/metrics").json()
        per_day = body["action_distribution"]["per_day"]
        assert sum(sum(row) for row in per_day) == 3 * 9 * 3  # users x days x dayparts

    def test_engagement_split(self, driven):
        _, client = driven
        body = client.get("/metrics").json()
        day0 = body["ratings_per_day"][0]
        assert day0["users_rated"] == 2
        assert day0["fraction_rated"] == pytest.approx(2 / 3, abs=1e-6)

    def test_online_and_from_logs_agree(self, driven):
        gw, client = driven
        body = client.get("/metrics").json()
        n = body["days"]
        assert gw.online.per_day_table(n) == body["action_distribution"]["per_day"]
        streamed = gw.online.week_mean(0, set(gw.engine.users()), n)
        computed = body["reward_weeks"][0]["cohort"]["all_dayparts"]["mean"]
        assert streamed == pytest.approx(computed, abs=1e-6)

    def test_starred_rows_exclude_dropouts(self, driven):
        _, client = driven
        body = client.get("/metrics").json()
        assert body["active_after_exploration"] == ["p1", "p2"]
        week2 = body["reward_weeks"][1]
        assert "active_only" in week2
        assert "active_only" not in body["reward_weeks"][0]
        # p3 contributes nothing but zeros, so the starred mean can only rise
        assert (
            week2["active_only"]["all_dayparts"]["mean"]
            >= week2["cohort"]["all_dayparts"]["mean"]
        )

    def test_deterministic(self, driven):
        _, client = driven
        assert client.get("/metrics").json() == client.get("/metrics").json()


class TestAdminEndpoints:
    def test_train_without_data(self, fresh):
        _, client = fresh
        r = client.post("/admin/train", json={"as_of_day": 0})
        assert r.status_code == 409
        assert r.json()["error"]["code"] == "NO_DATA"

    def test_train_publishes(self, driven):
        _, client = driven
        r = client.post("/admin/train", json={"as_of_day": 8})
        assert r.status_code == 200
        body = r.json()
        assert body["policies"]["pooled"] >= 1
        assert body["report"]["as_of_day"] == 8

    def test_cluster_endpoint(self, driven):
        _, client = driven
        r = client.post("/admin/cluster", json={})
        assert r.status_code == 200
        body = r.json()
        assert body["k"] == 2
        assert set(body["assignment"]) == {"p1", "p2", "p3"}

    def test_cluster_k_too_large(self, fresh):
        gw, client = fresh
        client.post("/users", json={"user_id": "only"})
        r = client.post("/admin/cluster", json={})
        assert r.status_code == 409
        assert r.json()["error"]["code"] == "NO_DATA"


class TestHealth:
    def test_healthz(self, fresh):
        gw, client = fresh
        r = client.get("/healthz")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert body["now"] == gw.clock.now()
        assert body["day"] == 0 and body["daypart"] == 0  # virtual clock at day-0 midnight
        gw.clock.advance_to("2026-01-06T15:00:00")
        body = client.get("/healthz").json()
        assert body["day"] == 1 and body["daypart"] == 1


class TestAuth:
    def test_token_required_when_configured(self, tmp_path):
        gw = make_gateway(tmp_path, api_token="sekrit")
        client = TestClient(create_app(gw))
        try:
            assert client.get("/healthz").status_code == 401
            bad = client.get("/healthz", headers={"Authorization": "Bearer wrong"})
            assert bad.status_code == 401
            assert bad.json()["error"]["code"] == "UNAUTHORIZED"
            ok = client.get("/healthz", headers={"Authorization": "Bearer sekrit"})
            assert ok.status_code == 200
        finally:
            gw.close()

    def test_no_token_means_open(self, fresh):
        _, client = fresh
        assert client.get("/healthz").status_code == 200


class TestSchedulerIntegration:
    def test_nightly_training_note(self, driven):
        gw, _ = driven
        days = [n["day"] for n in gw.training_notes]
        assert days == list(range(9))
        trained = [n for n in gw.training_notes if "report" in n]
        assert trained, "at least one nightly training actually ran"

    def test_clustering_ran_on_schedule(self, driven):
        gw, _ = driven
        assert gw.engine.cluster_model is not None
        assert "cluster:7" in gw.scheduler.done()

    def test_restart_reconstructs_state(self, driven, tmp_path):
        gw, _ = driven
        import shutil

        data_copy = tmp_path / "data"
        shutil.copytree(gw.cfg.data_dir, data_copy)
        cfg = AppConfig(data_dir=str(data_copy), start_date=START, seed=11)
        twin = ServiceGateway(cfg)
        try:
            assert twin.engine.users() == gw.engine.users()
            assert len(twin.events) == len(gw.events)
            assert len(twin.engine.decisions.all()) == len(gw.engine.decisions.all())
            assert twin.scheduler.done() == gw.scheduler.done()
            twin.clock.advance_to(gw.clock.now())
            assert twin.tick() == []  # nothing refires
        finally:
            twin.close()


class TestGatewayDirect:
    def test_api_error_carries_status(self, fresh):
        gw, _ = fresh
        with pytest.raises(ApiError) as err:
            gw.post_rating("ghost", 5)
        assert err.value.code == "UNKNOWN_USER"
        assert err.value.status == 404

    def test_bool_rating_rejected(self, fresh):
        gw, _ = fresh
        gw.register_user("u")
        with pytest.raises(ApiError) as err:
            gw.post_rating("u", True)
        assert err.value.code == "OUT_OF_RANGE"
