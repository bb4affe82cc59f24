from __future__ import annotations

import json

from fastapi.testclient import TestClient

from claimtrace.demo import build_demo_context
from claimtrace.server import create_app


def test_demo_context_serves_all_states(tmp_path):
    ctx = build_demo_context(tmp_path / "logs")
    assert len(ctx.corpus.claims) >= 4
    assert all(e.pregenerated for e in ctx.question_bank)
    with TestClient(create_app(ctx)) as client:
        sid = client.post(
            "/api/sessions", json={"condition": "provenance", "task_id": "synthesis"}
        ).json()["session_id"]
        client.post(f"/api/sessions/{sid}/ask", json={"question_id": "q-cost"})
        report = client.get(f"/api/sessions/{sid}/turns/0").json()["result"]["report"]
        # the demo answer exercises included, omitted, and unsupported states
        assert report["included"]
        assert report["omitted"]
        assert report["unsupported_answer_claims"]


def test_demo_turns_are_deterministic(tmp_path):
    a = build_demo_context(tmp_path / "a")
    b = build_demo_context(tmp_path / "b")
    pa = a.question_bank[0].pregenerated
    pb = b.question_bank[0].pregenerated
    assert json.dumps(pa, sort_keys=True) == json.dumps(pb, sort_keys=True)
