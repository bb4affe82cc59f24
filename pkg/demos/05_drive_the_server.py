"""Drive the HTTP API in-process: sessions, turns, events, and replay.

The same endpoints back the web frontend. `claimtrace serve --demo` runs
this server on a real port; here an in-process test client keeps the demo
self-contained.
"""

import json
import tempfile
import time

from fastapi.testclient import TestClient

from claimtrace.demo import build_demo_context
from claimtrace.server import create_app, replay_session

log_root = tempfile.mkdtemp(prefix="claimtrace-demo-")
ctx = build_demo_context(log_root)
client = TestClient(create_app(ctx))

session = client.post("/api/sessions",
                      json={"condition": "provenance", "task_id": "synthesis"}).json()
sid = session["session_id"]
print("session:", sid, "| task:", session["task"]["title"])
print("initial draft:", session["editor"]["text"][:70], "...")

bank = client.get("/api/question-bank", params={"task": "synthesis"}).json()["questions"]
print("\nquestion bank:", [q["question_id"] for q in bank])

# pre-generated turns come back instantly; free-text questions poll
client.post(f"/api/sessions/{sid}/ask", json={"question_id": bank[0]["question_id"]})
turn = client.get(f"/api/sessions/{sid}/turns/0").json()
report = turn["result"]["report"]
print("\nturn 0 coverage:", report["coverage"])
print("omitted claims:", report["omitted"][:3], "...")

client.post(f"/api/sessions/{sid}/ask", json={"text": "What about radar calibration?"})
while client.get(f"/api/sessions/{sid}/turns/1").json()["status"] == "running":
    time.sleep(0.05)
print("turn 1 status:", client.get(f"/api/sessions/{sid}/turns/1").json()["status"])

# the interface logs every provenance interaction
now = int(time.time() * 1000)
client.post("/api/events", json={"session_id": sid, "timestamp": now,
                                 "kind": "claim_clicked", "payload": {"claim_id": report["included"][0]}})
client.post(f"/api/sessions/{sid}/editor", json={"text": "A better draft."})

replayed = replay_session(ctx.log_root, sid)
print("\nreplayed editor versions:", len(replayed["editor_versions"]))
print("replayed turns:", [(t["index"], t["status"]) for t in replayed["turns"]])

# baseline condition gets verbatim sources instead of claim cards
b = client.post("/api/sessions", json={"condition": "baseline", "task_id": "synthesis"}).json()
client.post(f"/api/sessions/{b['session_id']}/ask", json={"question_id": "q-cost"})
result = client.get(f"/api/sessions/{b['session_id']}/turns/0").json()["result"]
print("\nbaseline payload keys:", sorted(result.keys()))
first_cited = next(s for s in result["source_view"] if s["citations"])
print("baseline sources for sentence", first_cited["sentence_index"], "->",
      json.dumps(first_cited["sources"][0]["sections"], indent=2)[:200], "...")
