"""HTTP API behind the human-evaluation console.

Each session is a seeded sequence of single-bug tasks. The evaluator fetches
one task at a time, answers once per task, and sees accuracy only in the
summary. Session state is persisted to one JSON file per session.
"""

from __future__ import annotations

import json
import random
import threading
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .ast_core import Ast, RepairInstance, describe_payload
from .bugs import generate_instances, inject_bugs, label_reference
from .corpus import Snippet
from .neural.model import Model
from .parser import parse
from .unparse import unparse

DEFAULT_TASKS = 30
MAX_TASK_NODES = 150


class AnswerBody(BaseModel):
    instance: int
    candidate: str
    elapsed_ms: int
    task_index: Optional[int] = None


class Task:
    """One snippet with its instances, reference answer, and display data."""

    def __init__(self, ast: Ast, instances: list[RepairInstance]):
        self.instances = instances
        self.source = unparse(ast)
        # Reparsing the rendered source preserves node ids (structural
        # fixpoint) and yields spans that index into the displayed text.
        self.display_ast = parse(self.source)
        ref = [
            (ii, inst.reference) for ii, inst in enumerate(instances)
            if inst.reference is not None and inst.reference != inst.noop_index
        ]
        if len(ref) != 1:
            raise ValueError("task must have exactly one non-no-op reference")
        self.ref_instance, self.ref_candidate = ref[0]

    @staticmethod
    def candidate_key(ii: int, ci: int) -> str:
        return f"{ii}:{ci}"

    def payload(self, probs: Optional[dict] = None, top4_order: Optional[list] = None) -> dict:
        """JSON view. top4_order, when given, is the list of (location, ci)
        pairs to expose; everything else is withheld."""
        insts = []
        for ii, inst in enumerate(self.instances):
            node = self.display_ast.nodes[inst.location]
            cands = []
            for ci, cand in enumerate(inst.candidates):
                if top4_order is not None and (ii, ci) not in top4_order:
                    continue
                cands.append({
                    "id": self.candidate_key(ii, ci),
                    "display": describe_payload(cand.payload, node.value),
                })
            if not cands:
                continue
            if top4_order is not None:
                cands.sort(key=lambda c: top4_order.index(
                    (ii, int(c["id"].split(":")[1]))))
            start, end = node.span if node.span else (0, 0)
            insts.append({
                "id": ii,
                "location": inst.location,
                "bug_type": inst.bug_type,
                "span": {"start": start, "end": end},
                "candidates": cands,
            })
        return {"source": self.source, "instances": insts}


def _model_top4(model: Model, ast: Ast, task: Task,
                rng: random.Random) -> list[tuple[int, int]]:
    """The model's top-4 non-no-op candidates, or top 3 plus the reference
    when the reference is not already among them; shuffled."""
    probs = model.score_snippet(ast, task.instances)
    scored = []
    for ii, (inst, p) in enumerate(zip(task.instances, probs)):
        for ci, cand in enumerate(inst.candidates):
            if not cand.is_noop:
                scored.append((-float(p[ci]), ii, ci))
    scored.sort()
    top = [(ii, ci) for _, ii, ci in scored[:4]]
    ref = (task.ref_instance, task.ref_candidate)
    if ref not in top:
        top = top[:3] + [ref]
    rng.shuffle(top)
    return top


class Session:
    def __init__(self, sid: str, mode: str, tasks: list[Task], seed: int):
        self.sid = sid
        self.mode = mode
        self.tasks = tasks
        self.seed = seed
        self.answers: list[dict] = []
        self.lock = threading.Lock()
        self.top4_cache: dict[int, list] = {}

    @property
    def current(self) -> int:
        return len(self.answers)

    @property
    def done(self) -> bool:
        return self.current >= len(self.tasks)

    def to_json(self) -> dict:
        return {
            "id": self.sid, "mode": self.mode, "seed": self.seed,
            "task_count": len(self.tasks), "answers": self.answers,
        }


def create_app(model: Model, snippets: list[Snippet], seed: int = 0,
               sessions_dir: str = "sessions",
               frontend_dir: Optional[str] = None,
               max_nodes: int = MAX_TASK_NODES) -> FastAPI:
    app = FastAPI(title="repair evaluation console")
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    sessions_path = Path(sessions_dir)
    sessions_path.mkdir(parents=True, exist_ok=True)

    pool = [s for s in snippets if s.ast.n <= max_nodes]

    def persist(session: Session) -> None:
        path = sessions_path / f"{session.sid}.json"
        path.write_text(json.dumps(session.to_json(), indent=2), encoding="utf-8")

    def make_tasks(rng: random.Random, n: int) -> list[Task]:
        tasks: list[Task] = []
        order = list(range(len(pool)))
        rng.shuffle(order)
        for idx in order:
            if len(tasks) >= n:
                break
            snip = pool[idx]
            try:
                rec = inject_bugs(snip.ast, 1, rng)
                instances = label_reference(generate_instances(rec.buggy), rec)
                tasks.append(Task(rec.buggy, instances))
            except Exception:
                continue
        if len(tasks) < n:
            raise HTTPException(500, f"only {len(tasks)} usable snippets, need {n}")
        return tasks

    def get_session(sid: str) -> Session:
        s = sessions.get(sid)
        if s is None:
            raise HTTPException(404, "unknown session")
        return s

    @app.get("/api/session/new")
    def new_session(mode: str = "full", n: int = DEFAULT_TASKS):
        if mode not in ("full", "top4"):
            raise HTTPException(422, "mode must be 'full' or 'top4'")
        if n < 1:
            raise HTTPException(422, "n must be >= 1")
        sid = uuid.uuid4().hex[:12]
        session_seed = random.Random(f"{seed}:{sid}").randrange(2 ** 31)
        rng = random.Random(f"{session_seed}:tasks")
        session = Session(sid, mode, make_tasks(rng, n), session_seed)
        with registry_lock:
            sessions[sid] = session
        persist(session)
        return {"session": sid, "mode": mode, "tasks": n}

    @app.get("/api/session/{sid}/task")
    def get_task(sid: str):
        session = get_session(sid)
        with session.lock:
            if session.done:
                return {"done": True, "task_index": session.current,
                        "task_count": len(session.tasks)}
            i = session.current
            task = session.tasks[i]
            top4 = None
            if session.mode == "top4":
                if i not in session.top4_cache:
                    rng = random.Random(f"{session.seed}:top4:{i}")
                    session.top4_cache[i] = _model_top4(
                        model, task.display_ast, task, rng)
                top4 = session.top4_cache[i]
            body = task.payload(top4_order=top4)
            body.update({"done": False, "task_index": i,
                         "task_count": len(session.tasks)})
            return body

    @app.post("/api/session/{sid}/answer")
    def answer(sid: str, body: AnswerBody):
        session = get_session(sid)
        with session.lock:
            if session.done:
                raise HTTPException(409, "session complete")
            i = session.current
            if body.task_index is not None and body.task_index != i:
                raise HTTPException(409, "task already answered")
            task = session.tasks[i]
            if not 0 <= body.instance < len(task.instances):
                raise HTTPException(422, "unknown instance")
            inst = task.instances[body.instance]
            try:
                ii_s, ci_s = body.candidate.split(":")
                ii, ci = int(ii_s), int(ci_s)
            except ValueError:
                raise HTTPException(422, "malformed candidate id")
            if ii != body.instance or not 0 <= ci < len(inst.candidates):
                raise HTTPException(422, "candidate does not belong to instance")
            if session.mode == "top4":
                allowed = session.top4_cache.get(i, [])
                if (ii, ci) not in allowed:
                    raise HTTPException(422, "candidate was not offered")
            correct = (ii == task.ref_instance and ci == task.ref_candidate)
            session.answers.append({
                "task_index": i, "instance": body.instance,
                "candidate": body.candidate, "elapsed_ms": body.elapsed_ms,
                "correct": correct,
            })
            persist(session)
            return {"correct": correct, "task_index": i}

    @app.get("/api/session/{sid}/summary")
    def summary(sid: str):
        session = get_session(sid)
        with session.lock:
            total = len(session.answers)
            correct = sum(1 for a in session.answers if a["correct"])
            return {
                "session": sid, "mode": session.mode,
                "answered": total, "task_count": len(session.tasks),
                "correct": correct,
                "accuracy": correct / total if total else None,
                "records": session.answers,
            }

    if frontend_dir:
        dist = Path(frontend_dir)
        if dist.is_dir():
            app.mount("/assets", StaticFiles(directory=dist), name="assets")

            @app.get("/")
            def index():
                return FileResponse(dist / "index.html")

    return app
