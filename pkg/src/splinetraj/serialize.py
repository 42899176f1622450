"""JSON and CSV codecs for the library's value types.

All emitted JSON uses a fixed key order and Python's shortest round-trip
float representation, so identical values serialize to identical bytes and
every file re-parses to an equal in-memory value.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Sequence

import numpy as np

from .bezier import BezierSpline
from .data import Dataset, SubjectSeries
from .hierarchy import DiscretePath, MeanResult
from .manifolds import SPD, Euclidean, Manifold, ManifoldPoint, Product, Sphere
from .stats import GramAnalysis


def manifold_to_json(m: Manifold) -> dict:
    if isinstance(m, Euclidean):
        return {"kind": "euclidean", "dim": m.d}
    if isinstance(m, Sphere):
        return {"kind": "sphere", "dim": m.d}
    if isinstance(m, SPD):
        return {"kind": "spd", "size": m.m}
    if isinstance(m, Product):
        return {"kind": "product", "factors": [manifold_to_json(f) for f in m.factors]}
    raise TypeError(f"cannot serialize manifold {m!r}")


def manifold_from_json(obj: dict) -> Manifold:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("manifold JSON must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind == "euclidean":
        return Euclidean(int(obj["dim"]))
    if kind == "sphere":
        return Sphere(int(obj["dim"]))
    if kind == "spd":
        return SPD(int(obj["size"]))
    if kind == "product":
        return Product(tuple(manifold_from_json(f) for f in obj["factors"]))
    raise ValueError(f"unknown manifold kind {kind!r}")


def _coords(x: np.ndarray) -> list[float]:
    return [float(c) for c in x]


def spline_to_json(B: BezierSpline) -> dict:
    return {
        "manifold": manifold_to_json(B.manifold),
        "degrees": list(B.degrees),
        "closed": B.closed,
        "control_points": [_coords(p.coords) for p in B.control_points],
    }


def spline_from_json(obj: dict) -> BezierSpline:
    mfd = manifold_from_json(obj["manifold"])
    points = tuple(ManifoldPoint(np.asarray(c, dtype=float), mfd) for c in obj["control_points"])
    return BezierSpline(mfd, tuple(int(k) for k in obj["degrees"]), bool(obj["closed"]), points)


def path_to_json(path: DiscretePath) -> dict:
    return {
        "n": path.n,
        "splines": [spline_to_json(B) for B in path.splines],
        "energy": path.energy,
        "converged": path.converged,
        "energy_trace": list(path.energy_trace),
    }


def path_from_json(obj: dict) -> DiscretePath:
    return DiscretePath(
        splines=tuple(spline_from_json(s) for s in obj["splines"]),
        energy=float(obj["energy"]),
        converged=bool(obj.get("converged", True)),
        energy_trace=tuple(float(e) for e in obj.get("energy_trace", [])),
    )


def mean_result_to_json(result: MeanResult) -> dict:
    return {
        "mean": spline_to_json(result.mean),
        "total_energy": result.total_energy,
        "iterations": result.iterations,
        "converged": result.converged,
        "energy_trace": list(result.energy_trace),
        "paths": [path_to_json(p) for p in result.paths],
    }


def mean_result_from_json(obj: dict) -> MeanResult:
    return MeanResult(
        mean=spline_from_json(obj["mean"]),
        paths=tuple(path_from_json(p) for p in obj["paths"]),
        total_energy=float(obj["total_energy"]),
        iterations=int(obj["iterations"]),
        converged=bool(obj["converged"]),
        energy_trace=tuple(float(e) for e in obj.get("energy_trace", [])),
    )


def dataset_to_json(ds: Dataset) -> dict:
    return {
        "manifold": manifold_to_json(ds.manifold),
        "subjects": [
            {
                "id": s.id,
                "samples": [
                    {"t": t, "point": _coords(q.coords)} for t, q in zip(s.times, s.points)
                ],
            }
            for s in ds.subjects
        ],
    }


def dataset_from_json(obj: dict) -> Dataset:
    mfd = manifold_from_json(obj["manifold"])
    subjects = []
    for sub in obj["subjects"]:
        sid = str(sub["id"])
        times = []
        points = []
        for i, sample in enumerate(sub["samples"]):
            times.append(float(sample["t"]))
            try:
                points.append(ManifoldPoint(np.asarray(sample["point"], dtype=float), mfd))
            except ValueError as err:
                raise ValueError(f"subject {sid!r} sample {i}: {err}") from None
        subjects.append(SubjectSeries(sid, tuple(times), tuple(points)))
    return Dataset(mfd, tuple(subjects))


def scores_csv(ids: Sequence[str], analysis: GramAnalysis) -> str:
    """Score table: one row per subject, one column per retained mode."""
    if len(ids) != analysis.scores.shape[0]:
        raise ValueError("need exactly one id per subject row")
    header = "subject_id" + "".join(f",mode_{k + 1}" for k in range(analysis.num_modes))
    lines = [header]
    for sid, row in zip(ids, analysis.scores):
        lines.append(sid + "".join(f",{float(x)!r}" for x in row))
    return "\n".join(lines) + "\n"


def eigenvalues_json(analysis: GramAnalysis) -> dict:
    return {"eigenvalues": list(analysis.eigenvalues)}


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the target directory plus rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
