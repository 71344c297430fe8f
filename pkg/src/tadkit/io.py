"""JSONL records, task lists and run manifests."""

from __future__ import annotations

import hashlib
import json
import math
from typing import Iterable, Iterator

from ._validation import ParseError, ValidationError
from .tad import TaskSpec

__all__ = [
    "read_jsonl",
    "write_jsonl",
    "load_tasks",
    "save_tasks",
    "load_accuracies",
    "load_distances",
    "file_digest",
    "run_manifest",
]


def read_jsonl(path) -> Iterator[dict]:
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(exc.msg, n, str(path)) from None
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", n, str(path))
            yield obj


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return obj.item()
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=False, separators=(",", ":"))


def write_jsonl(records: Iterable[dict], fh) -> None:
    for r in records:
        fh.write(dumps(r))
        fh.write("\n")


def load_tasks(path) -> list[TaskSpec]:
    tasks = []
    for obj in read_jsonl(path):
        tasks.append(TaskSpec.from_dict(obj))
    if not tasks:
        raise ValidationError(f"{path}: no tasks")
    return tasks


def save_tasks(tasks: Iterable[TaskSpec], fh) -> None:
    write_jsonl((t.to_dict() for t in tasks), fh)


def _load_map(path, key: str) -> dict[str, float]:
    out = {}
    for n, obj in enumerate(read_jsonl(path), 1):
        try:
            out[str(obj["task_id"])] = float(obj[key])
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"record needs 'task_id' and numeric {key!r}", n, str(path)) from None
    return out


def load_accuracies(path) -> dict[str, float]:
    """``{"task_id": ..., "accuracy": ...}`` lines."""
    return _load_map(path, "accuracy")


def load_distances(path) -> dict[str, float]:
    """``{"task_id": ..., "mean_distance": ...}`` lines, as written by ``tadkit tad``."""
    return _load_map(path, "mean_distance")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def run_manifest(command: str, params: dict, inputs: Iterable[str], seeds=(), generator: str | None = None,
                 version: str = "") -> dict:
    """Everything needed to re-run a command; contains no timestamps."""
    return {
        "command": command,
        "params": _clean(params),
        "seeds": list(seeds),
        "generator": generator,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "version": version,
    }
