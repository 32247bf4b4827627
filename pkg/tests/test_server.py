"""Session API: task delivery, answer protocol, summary bookkeeping."""

import json

import pytest
from fastapi.testclient import TestClient

from corpusgen import make_corpus
from sscrepair.corpus import build_vocab
from sscrepair.neural import Hyperparams, Model
from sscrepair.server import create_app


@pytest.fixture(scope="module")
def snips():
    return make_corpus(60, seed=50)


@pytest.fixture(scope="module")
def model(snips):
    hp = Hyperparams(embed_dim=8, hidden_dim=16, module_hidden=16,
                     dropout=0.0, vocab_size=128)
    return Model(hp, build_vocab(snips, 128))


@pytest.fixture()
def client(model, snips, tmp_path):
    app = create_app(model, snips, seed=13, sessions_dir=str(tmp_path / "sess"))
    with TestClient(app) as c:
        c.sessions_dir = tmp_path / "sess"
        yield c


def _new(client, mode="full", n=4):
    r = client.get("/api/session/new", params={"mode": mode, "n": n})
    assert r.status_code == 200
    return r.json()["session"]


class TestSessionLifecycle:
    def test_task_shape(self, client):
        sid = _new(client)
        task = client.get(f"/api/session/{sid}/task").json()
        assert task["done"] is False and task["task_index"] == 0
        assert task["task_count"] == 4
        assert task["instances"], "tasks must expose repair instances"
        src = task["source"]
        for inst in task["instances"]:
            sp = inst["span"]
            assert 0 <= sp["start"] < sp["end"] <= len(src)
            assert src[sp["start"]:sp["end"]].strip()
            assert inst["candidates"]
            for cand in inst["candidates"]:
                assert set(cand) == {"id", "display"}

    def test_task_is_stable_until_answered(self, client):
        sid = _new(client)
        a = client.get(f"/api/session/{sid}/task").json()
        b = client.get(f"/api/session/{sid}/task").json()
        assert a == b

    def test_no_correctness_leak_before_submission(self, client):
        sid = _new(client, mode="top4")
        blob = client.get(f"/api/session/{sid}/task").text
        for word in ("correct", "reference", "noop"):
            assert word not in blob

    def test_answer_advances_and_locks(self, client):
        sid = _new(client, n=2)
        for t in range(2):
            task = client.get(f"/api/session/{sid}/task").json()
            inst = task["instances"][0]
            body = {"instance": inst["id"], "candidate": inst["candidates"][0]["id"],
                    "elapsed_ms": 1500, "task_index": t}
            first = client.post(f"/api/session/{sid}/answer", json=body)
            assert first.status_code == 200
            assert isinstance(first.json()["correct"], bool)
            dup = client.post(f"/api/session/{sid}/answer", json=body)
            assert dup.status_code == 409
        done = client.get(f"/api/session/{sid}/task").json()
        assert done["done"] is True
        after = client.post(f"/api/session/{sid}/answer", json=body)
        assert after.status_code == 409

    def test_summary_matches_recount(self, client):
        sid = _new(client, n=4)
        for t in range(4):
            task = client.get(f"/api/session/{sid}/task").json()
            inst = task["instances"][0]
            client.post(f"/api/session/{sid}/answer", json={
                "instance": inst["id"], "candidate": inst["candidates"][0]["id"],
                "elapsed_ms": 10, "task_index": t})
        s = client.get(f"/api/session/{sid}/summary").json()
        assert s["answered"] == 4
        recount = sum(1 for r in s["records"] if r["correct"])
        assert s["correct"] == recount
        assert s["accuracy"] == recount / 4
        persisted = json.loads(
            (client.sessions_dir / f"{sid}.json").read_text())
        assert len(persisted["answers"]) == 4
        assert sum(1 for a in persisted["answers"] if a["correct"]) == recount

    def test_unknown_session_404(self, client):
        assert client.get("/api/session/nope/task").status_code == 404

    def test_bad_mode_rejected(self, client):
        r = client.get("/api/session/new", params={"mode": "top7", "n": 3})
        assert r.status_code == 422


class TestTop4:
    def test_exactly_four_candidates(self, client):
        sid = _new(client, mode="top4", n=5)
        for t in range(5):
            task = client.get(f"/api/session/{sid}/task").json()
            total = sum(len(i["candidates"]) for i in task["instances"])
            assert total == 4
            inst = task["instances"][0]
            client.post(f"/api/session/{sid}/answer", json={
                "instance": inst["id"], "candidate": inst["candidates"][0]["id"],
                "elapsed_ms": 5, "task_index": t})

    def test_offered_ids_distinct(self, client):
        sid = _new(client, mode="top4", n=3)
        task = client.get(f"/api/session/{sid}/task").json()
        offered = [(i["id"], c["id"]) for i in task["instances"]
                   for c in i["candidates"]]
        assert len(offered) == 4 and len(set(offered)) == 4

    def test_reference_always_in_top4(self, model, snips):
        """The candidate subset must contain the reference even when the
        model ranks it outside its own top 4."""
        import random
        from sscrepair.bugs import generate_instances, inject_bugs, label_reference
        from sscrepair.server import Task, _model_top4
        checked = 0
        for i, s in enumerate(snips[:30]):
            rec = inject_bugs(s.ast, 1, random.Random(i))
            if len(rec.bugs) != 1:
                continue
            insts = label_reference(generate_instances(rec.buggy), rec)
            task = Task(rec.buggy, insts)
            top = _model_top4(model, task.display_ast, task, random.Random(i))
            assert len(top) == 4
            assert (task.ref_instance, task.ref_candidate) in top
            checked += 1
        assert checked >= 20

    def test_unoffered_candidate_rejected(self, client):
        sid = _new(client, mode="top4", n=1)
        task = client.get(f"/api/session/{sid}/task").json()
        offered = {c["id"] for i in task["instances"] for c in i["candidates"]}
        # find an instance with a withheld candidate id
        for i in task["instances"]:
            probe = f"{i['id']}:99"
            assert probe not in offered
            r = client.post(f"/api/session/{sid}/answer", json={
                "instance": i["id"], "candidate": probe,
                "elapsed_ms": 5, "task_index": 0})
            assert r.status_code == 422
            break
