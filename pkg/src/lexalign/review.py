"""Human review queue: item flags and stage gates, persisted per run.

Tasks live in tasks.json (rewritten atomically on every change); decisions are
also appended to decisions.log as one JSON line each, so the audit trail
survives task-file rewrites.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Callable, Mapping

from .model import utc_now

REVIEW_STAGES = ("segmentation", "alignment", "extraction", "standardization")
TASK_KINDS = ("item", "gate")
DECISIONS = ("approve", "reject")


class UnknownTask(KeyError):
    def __init__(self, task_id: str):
        super().__init__(task_id)
        self.task_id = task_id

    def __str__(self) -> str:
        return f"no such review task: {self.task_id}"


class AlreadyDecided(RuntimeError):
    def __init__(self, task_id: str, status: str):
        super().__init__(f"task {task_id} is already {status}")
        self.task_id = task_id
        self.status = status


class FeedbackRequired(ValueError):
    pass


@dataclass(frozen=True)
class ReviewTask:
    id: str
    kind: str
    stage: str
    title: str
    status: str = "open"
    payload: Mapping[str, Any] | None = None
    qc_notes: tuple[str, ...] = ()
    rerun_ref: Mapping[str, Any] | None = None
    created_at: str = ""
    decided_at: str | None = None
    feedback: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in TASK_KINDS:
            raise ValueError(f"kind must be one of {TASK_KINDS}, got {self.kind!r}")
        if self.stage not in REVIEW_STAGES:
            raise ValueError(f"stage must be one of {REVIEW_STAGES}, got {self.stage!r}")
        if self.status not in ("open", "approved", "rejected", "superseded"):
            raise ValueError(f"bad status {self.status!r}")


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a same-directory temp file and rename, so readers never see
    a half-written artifact."""
    target = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=target.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def task_to_dict(task: ReviewTask) -> dict[str, Any]:
    out = asdict(task)
    out["qc_notes"] = list(task.qc_notes)
    out["payload"] = dict(task.payload) if task.payload is not None else None
    out["rerun_ref"] = dict(task.rerun_ref) if task.rerun_ref is not None else None
    return out


def task_from_dict(data: Mapping[str, Any]) -> ReviewTask:
    return ReviewTask(
        id=data["id"],
        kind=data["kind"],
        stage=data["stage"],
        title=data["title"],
        status=data["status"],
        payload=data.get("payload"),
        qc_notes=tuple(data.get("qc_notes") or ()),
        rerun_ref=data.get("rerun_ref"),
        created_at=data.get("created_at", ""),
        decided_at=data.get("decided_at"),
        feedback=data.get("feedback"),
    )


class ReviewQueue:
    """Create, list, and decide review tasks; state persists in `directory`."""

    def __init__(self, directory: str | Path,
                 clock: Callable[[], str] = utc_now):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._clock = clock
        self._tasks: dict[str, ReviewTask] = {}
        self._order: list[str] = []
        self._next_id = 1
        self._load()

    @property
    def tasks_path(self) -> Path:
        return self.directory / "tasks.json"

    @property
    def decisions_path(self) -> Path:
        return self.directory / "decisions.log"

    def _load(self) -> None:
        if not self.tasks_path.exists():
            return
        data = json.loads(self.tasks_path.read_text(encoding="utf-8"))
        self._next_id = int(data.get("next_id", 1))
        for item in data.get("tasks", ()):
            task = task_from_dict(item)
            self._tasks[task.id] = task
            self._order.append(task.id)

    def _save(self) -> None:
        payload = {
            "schema_version": 1,
            "next_id": self._next_id,
            "tasks": [task_to_dict(self._tasks[tid]) for tid in self._order],
        }
        atomic_write_text(self.tasks_path,
                          json.dumps(payload, ensure_ascii=False, indent=2) + "\n")

    def create(self, *, kind: str, stage: str, title: str,
               payload: Mapping[str, Any] | None = None,
               qc_notes: tuple[str, ...] = (),
               rerun_ref: Mapping[str, Any] | None = None) -> ReviewTask:
        task = ReviewTask(
            id=f"task-{self._next_id:04d}",
            kind=kind,
            stage=stage,
            title=title,
            payload=payload,
            qc_notes=tuple(qc_notes),
            rerun_ref=rerun_ref,
            created_at=self._clock(),
        )
        self._next_id += 1
        self._tasks[task.id] = task
        self._order.append(task.id)
        self._save()
        return task

    def get(self, task_id: str) -> ReviewTask:
        try:
            return self._tasks[task_id]
        except KeyError:
            raise UnknownTask(task_id) from None

    def list(self, stage: str | None = None,
             status: str | None = None) -> list[ReviewTask]:
        tasks = [self._tasks[tid] for tid in self._order]
        if stage is not None:
            tasks = [t for t in tasks if t.stage == stage]
        if status is not None:
            tasks = [t for t in tasks if t.status == status]
        return tasks

    def open_tasks(self, stage: str | None = None) -> list[ReviewTask]:
        return self.list(stage=stage, status="open")

    def has_open(self, stage: str | None = None) -> bool:
        return bool(self.open_tasks(stage))

    def find_gate(self, stage: str) -> ReviewTask | None:
        for task in self.list(stage=stage):
            if task.kind == "gate":
                return task
        return None

    def decide(self, task_id: str, decision: str,
               feedback: str | None = None) -> ReviewTask:
        if decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}, got {decision!r}")
        task = self.get(task_id)
        if task.status != "open":
            raise AlreadyDecided(task_id, task.status)
        if decision == "reject" and not (feedback and feedback.strip()):
            raise FeedbackRequired("rejecting a task requires feedback text")
        decided_at = self._clock()
        updated = replace(
            task,
            status="approved" if decision == "approve" else "rejected",
            decided_at=decided_at,
            feedback=feedback.strip() if feedback else None,
        )
        self._tasks[task_id] = updated
        self._save()
        with self.decisions_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps({
                "task_id": task_id,
                "decision": decision,
                "feedback": updated.feedback,
                "decided_at": decided_at,
            }, ensure_ascii=False) + "\n")
        return updated

    def supersede_open(self, stage: str, kind: str = "item") -> list[ReviewTask]:
        """Close stale open tasks after their stage is re-run; they no longer
        describe current artifacts, so they should not block or mislead."""
        decided_at = self._clock()
        superseded: list[ReviewTask] = []
        for task in self.open_tasks(stage=stage):
            if task.kind != kind:
                continue
            updated = replace(task, status="superseded", decided_at=decided_at)
            self._tasks[task.id] = updated
            superseded.append(updated)
        if superseded:
            self._save()
            with self.decisions_path.open("a", encoding="utf-8") as handle:
                for task in superseded:
                    handle.write(json.dumps({
                        "task_id": task.id,
                        "decision": "supersede",
                        "feedback": None,
                        "decided_at": decided_at,
                    }, ensure_ascii=False) + "\n")
        return superseded
