import threading
import time

import pytest
from fastapi.testclient import TestClient

from proactive_switch.corpus import split_of
from proactive_switch.labels import Domain
from proactive_switch.pipeline import DialoguePipeline
from proactive_switch.service import create_app
from tests.test_pipeline import value_bearing_message


@pytest.fixture(scope="module")
def app_client(mini_trained):
    pipeline = DialoguePipeline(
        mini_trained["tie"].model,
        mini_trained["tokenizer"],
        mini_trained["adapter"].model,
        mini_trained["tokenizer"],
        seed=5,
    )
    app = create_app(pipeline)
    with TestClient(app) as client:
        yield client


@pytest.fixture()
def bare_client():
    with TestClient(create_app(None)) as client:
        yield client


class TestChat:
    def test_first_generic_message_is_unk(self, app_client):
        r = app_client.post("/api/chat", json={"session_id": "s1", "text": "hi"})
        assert r.status_code == 200
        body = r.json()
        assert body["info"]["domain"] == "UNK"
        assert body["transition_sentence"] is None
        assert body["turn_index"] == 1
        assert body["diagnostics"]["domain_probs"] is not None
        assert abs(sum(body["diagnostics"]["domain_probs"]) - 1.0) < 1e-6

    def test_value_message_returns_transition(self, app_client, small_corpus):
        message, domain = value_bearing_message(small_corpus)
        r = app_client.post("/api/chat", json={"session_id": "s2", "text": message})
        assert r.status_code == 200
        body = r.json()
        assert body["info"]["domain"] == domain.value
        assert body["transitioned"] is True
        assert body["prompt"].startswith("[TRANSITION]")

    def test_malformed_json_is_400(self, app_client):
        r = app_client.post("/api/chat", content=b"{nope", headers={"content-type": "application/json"})
        assert r.status_code == 400

    def test_missing_fields_400(self, app_client):
        assert app_client.post("/api/chat", json={"text": "hi"}).status_code == 400
        assert app_client.post("/api/chat", json={"session_id": "", "text": "hi"}).status_code == 400

    def test_turns_accumulate_in_order(self, app_client):
        for text in ("one", "two"):
            assert app_client.post("/api/chat", json={"session_id": "s3", "text": text}).status_code == 200
        r = app_client.get("/api/session/s3")
        assert r.status_code == 200
        turns = r.json()["turns"]
        assert len(turns) == 4
        assert [t["speaker"] for t in turns] == ["user", "system", "user", "system"]
        assert turns[0]["text"] == "one" and turns[2]["text"] == "two"


class TestSessions:
    def test_unknown_session_404(self, app_client):
        assert app_client.get("/api/session/ghost").status_code == 404

    def test_delete_then_404(self, app_client):
        app_client.post("/api/chat", json={"session_id": "gone", "text": "hi"})
        assert app_client.delete("/api/session/gone").status_code == 200
        assert app_client.get("/api/session/gone").status_code == 404
        assert app_client.delete("/api/session/gone").status_code == 404

    def test_ttl_eviction(self, mini_trained):
        pipeline = DialoguePipeline(
            mini_trained["tie"].model,
            mini_trained["tokenizer"],
            mini_trained["adapter"].model,
            mini_trained["tokenizer"],
        )
        with TestClient(create_app(pipeline, session_ttl=0.05)) as client:
            client.post("/api/chat", json={"session_id": "brief", "text": "hi"})
            time.sleep(0.1)
            assert client.get("/api/session/brief").status_code == 404

    def test_concurrent_same_session_409(self, mini_trained):
        pipeline = DialoguePipeline(
            mini_trained["tie"].model,
            mini_trained["tokenizer"],
            mini_trained["adapter"].model,
            mini_trained["tokenizer"],
        )
        app = create_app(pipeline)
        with TestClient(app) as client:
            client.post("/api/chat", json={"session_id": "busy", "text": "warm up"})
            session = app.state.sessions.get("busy")
            session.lock.acquire()  # simulate an in-flight request
            try:
                r = client.post("/api/chat", json={"session_id": "busy", "text": "again"})
                assert r.status_code == 409
            finally:
                session.lock.release()
            assert client.post("/api/chat", json={"session_id": "busy", "text": "again"}).status_code == 200


class TestHealth:
    def test_health_reports_hashes(self, app_client):
        r = app_client.get("/api/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert set(body["checkpoints"]) == {"tie", "generator"}
        assert len(body["checkpoints"]["tie"]) == 64

    def test_unloaded_service_503(self, bare_client):
        assert bare_client.get("/api/health").status_code == 503
        assert bare_client.post("/api/chat", json={"session_id": "s", "text": "hi"}).status_code == 503
