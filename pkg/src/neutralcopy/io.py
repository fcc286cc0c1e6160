"""Plain-text file formats.

Edge lists are ``u v`` lines (``u < v``, ascending). Node attribute files
are CSV with header ``node,social_type`` and an optional ``trait`` column.
Partition files are CSV ``node,community``. Trajectory CSVs start with a
``#`` line holding a JSON metadata object; readers skip ``#`` lines.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from neutralcopy.community import Partition
from neutralcopy.dynamics import TrajectoryRecord
from neutralcopy.errors import InvalidParameterError
from neutralcopy.graph import Graph

TRAJECTORY_HEADER = ["replicate", "step", "sweep", "chi2", "n00", "n01", "n10", "n11", "absorbed"]


class FormatError(ValueError):
    """A file does not match its expected layout."""


def fmt_float(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def metadata_line(meta: dict) -> str:
    return "# " + json.dumps(meta, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _data_lines(path: Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [ln for ln in fh if ln.strip() and not ln.startswith("#")]


def _write(path: Path, text: str) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_edge_list(path, g: Graph) -> None:
    _write(path, "".join(f"{u} {v}\n" for u, v in g.edges))


def read_edge_list(path, n: int | None = None) -> Graph:
    """Read an edge list; ``n`` defaults to one more than the largest id."""
    edges = []
    for lineno, ln in enumerate(_data_lines(Path(path)), 1):
        parts = ln.split()
        if len(parts) != 2:
            raise FormatError(f"{path}: line {lineno}: expected 'u v', got {ln.strip()!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: non-integer node id in {ln.strip()!r}") from None
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    try:
        return Graph(n, edges)
    except InvalidParameterError as exc:
        raise FormatError(f"{path}: {exc}") from None


def _read_csv(path, required: Sequence[str]) -> list[dict[str, str]]:
    lines = _data_lines(Path(path))
    reader = csv.DictReader(io.StringIO("".join(lines)))
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        raise FormatError(f"{path}: missing column(s) {', '.join(missing)}")
    return list(reader)


def _dense(rows: list[dict[str, str]], path) -> list[dict[str, str]]:
    try:
        rows = sorted(rows, key=lambda r: int(r["node"]))
    except ValueError:
        raise FormatError(f"{path}: non-integer node id") from None
    if [int(r["node"]) for r in rows] != list(range(len(rows))):
        raise FormatError(f"{path}: node ids must be exactly 0..n-1")
    return rows


def write_attributes(path, types: Sequence[int], traits: Sequence[int] | None = None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if traits is None:
        w.writerow(["node", "social_type"])
        w.writerows((i, int(t)) for i, t in enumerate(types))
    else:
        w.writerow(["node", "social_type", "trait"])
        w.writerows((i, int(t), int(y)) for i, (t, y) in enumerate(zip(types, traits)))
    _write(path, buf.getvalue())


def read_attributes(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Return ``(types, traits)``; ``traits`` is None without a trait column."""
    rows = _dense(_read_csv(path, ["node", "social_type"]), path)
    try:
        types = np.array([int(r["social_type"]) for r in rows], dtype=np.int8)
        traits = None
        if rows and "trait" in rows[0]:
            traits = np.array([int(r["trait"]) for r in rows], dtype=np.int8)
    except ValueError:
        raise FormatError(f"{path}: labels must be integers") from None
    for name, arr in (("social_type", types), ("trait", traits)):
        if arr is not None and not np.all((arr == 0) | (arr == 1)):
            raise FormatError(f"{path}: {name} values must be 0 or 1")
    return types, traits


def write_partition(path, partition: Partition) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "community"])
    w.writerows(enumerate(partition.labels.tolist()))
    _write(path, buf.getvalue())


def read_partition(path) -> Partition:
    rows = _dense(_read_csv(path, ["node", "community"]), path)
    try:
        return Partition.from_labels([int(r["community"]) for r in rows])
    except ValueError:
        raise FormatError(f"{path}: community ids must be integers") from None


def trajectory_rows(record: TrajectoryRecord, replicate: int = 0) -> Iterable[list]:
    for k in range(len(record)):
        step = int(record.steps[k])
        t = record.tables[k].ravel().tolist()
        yield [replicate, step, fmt_float(step / record.n), fmt_float(record.chi2[k]),
               *t, int(bool(record.absorbed[k]))]


def trajectory_csv(records: Iterable[tuple[int, TrajectoryRecord]], meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta is not None:
        buf.write(metadata_line(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    for rep, rec in records:
        w.writerows(trajectory_rows(rec, rep))
    return buf.getvalue()


def write_trajectory(path, records: Iterable[tuple[int, TrajectoryRecord]], meta: dict | None = None) -> None:
    _write(path, trajectory_csv(records, meta))


def read_trajectory(path) -> list[dict]:
    rows = _read_csv(path, TRAJECTORY_HEADER)
    out = []
    for r in rows:
        out.append({
            "replicate": int(r["replicate"]),
            "step": int(r["step"]),
            "sweep": float(r["sweep"]),
            "chi2": float(r["chi2"]),
            "table": [[int(r["n00"]), int(r["n01"])], [int(r["n10"]), int(r["n11"])]],
            "absorbed": r["absorbed"] == "1",
        })
    return out


def table_csv(header: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta is not None:
        buf.write(metadata_line(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_text(path, text: str) -> None:
    _write(path, text)
