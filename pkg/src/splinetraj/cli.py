"""Command-line surface tying the pipeline together.

Subcommands: fit, mean, geodesic, distance, descriptors, synth, eval.
Exit codes: 0 success, 1 input or domain error, 2 numerical non-convergence.
All commands are deterministic given identical inputs and flags; structured
output is JSON (CSV for the score table) written atomically.  Progress lines
go to stderr and are silenced by --quiet.  SPLINETRAJ_THREADS caps the worker
threads used for per-subject work (default: all cores).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import serialize
from .bezier import eval_spline
from .errors import ConvergenceError, DomainError
from .hierarchy import SplineSpace, discrete_geodesic, mean_trajectory, spline_distance
from .regression import FitOptions, RegressionProblem, fit
from .stats import SyntheticSpec, pga_pipeline, synthesize
from .data import Dataset


def _workers() -> int:
    raw = os.environ.get("SPLINETRAJ_THREADS", "")
    try:
        n = int(raw)
        if n >= 1:
            return n
    except ValueError:
        pass
    return os.cpu_count() or 1


def _progress(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _parse_degrees(text: str) -> tuple[int, ...]:
    try:
        degrees = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ValueError(f"--degrees expects comma-separated integers, got {text!r}") from None
    if not degrees:
        raise ValueError("--degrees must list at least one segment degree")
    return degrees


def _parse_times(text: str) -> tuple[float, ...]:
    try:
        times = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ValueError(f"--times expects comma-separated numbers, got {text!r}") from None
    if not times:
        raise ValueError("--times must list at least one value")
    return times


def _load_spline(path: str):
    try:
        return serialize.spline_from_json(serialize.load_json(path))
    except (ValueError, KeyError, TypeError) as err:
        raise ValueError(f"{path}: {err}") from None


def _cmd_fit(args) -> int:
    dataset = serialize.dataset_from_json(serialize.load_json(args.dataset))
    degrees = _parse_degrees(args.degrees)
    SplineSpace(dataset.manifold, degrees, args.closed)  # rejects bad closure structure
    os.makedirs(args.out, exist_ok=True)
    options = FitOptions(max_iter=args.max_iter, tol=args.tol)

    def fit_one(subject):
        problem = RegressionProblem(subject.samples(), degrees, args.closed)
        return fit(problem, options)

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(fit_one, dataset.subjects))

    report = {
        "manifold": serialize.manifold_to_json(dataset.manifold),
        "degrees": list(degrees),
        "closed": args.closed,
        "subjects": [],
    }
    all_converged = True
    for subject, result in zip(dataset.subjects, results):
        spline_path = os.path.join(args.out, f"{subject.id}.spline.json")
        serialize.atomic_write_text(spline_path, serialize.dumps(serialize.spline_to_json(result.spline)))
        report["subjects"].append(
            {
                "id": subject.id,
                "final_energy": result.final_energy,
                "iterations": result.iterations,
                "converged": result.converged,
                "underdetermined": result.underdetermined,
            }
        )
        all_converged = all_converged and result.converged
        _progress(
            args,
            f"[fit] {subject.id}: energy={result.final_energy:.6g} "
            f"iterations={result.iterations} converged={result.converged}",
        )
    serialize.atomic_write_text(
        os.path.join(args.out, "fit_report.json"), serialize.dumps(report)
    )
    return 0 if all_converged else 2


def _cmd_mean(args) -> int:
    subjects = [_load_spline(p) for p in args.splines]
    space = SplineSpace.of(subjects[0])
    for path, B in zip(args.splines, subjects):
        try:
            space.check_member(B)
        except DomainError as err:
            raise DomainError(f"{path}: {err}") from None
    result = mean_trajectory(subjects, args.n, workers=_workers())
    os.makedirs(args.out, exist_ok=True)
    serialize.atomic_write_text(
        os.path.join(args.out, "mean.spline.json"),
        serialize.dumps(serialize.spline_to_json(result.mean)),
    )
    serialize.atomic_write_text(
        os.path.join(args.out, "mean_result.json"),
        serialize.dumps(serialize.mean_result_to_json(result)),
    )
    _progress(
        args,
        f"[mean] total_energy={result.total_energy:.6g} iterations={result.iterations} "
        f"converged={result.converged}",
    )
    return 0 if result.converged else 2


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"--n must be >= 1, got {n}")


def _cmd_geodesic(args) -> int:
    _check_n(args.n)
    B1 = _load_spline(args.spline1)
    B2 = _load_spline(args.spline2)
    path = discrete_geodesic(B1, B2, args.n)
    text = serialize.dumps(serialize.path_to_json(path))
    if args.out:
        serialize.atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0 if path.converged else 2


def _cmd_distance(args) -> int:
    _check_n(args.n)
    B1 = _load_spline(args.spline1)
    B2 = _load_spline(args.spline2)
    path = discrete_geodesic(B1, B2, args.n)
    value = float(np.sqrt(max(path.energy, 0.0)))
    print(np.format_float_positional(value, precision=12, unique=False, fractional=False))
    return 0 if path.converged else 2


def _cmd_descriptors(args) -> int:
    mean = _load_spline(args.mean)
    subjects = [_load_spline(p) for p in args.splines]
    ids = []
    for path in args.splines:
        stem = os.path.basename(path)
        for suffix in (".spline.json", ".json"):
            if stem.endswith(suffix):
                stem = stem[: -len(suffix)]
                break
        ids.append(stem)
    if len(set(ids)) != len(ids):
        raise ValueError("subject spline filenames must be distinct to derive unique ids")
    analysis = pga_pipeline(mean, subjects, m=args.samples_per_segment)
    serialize.atomic_write_text(args.out, serialize.scores_csv(ids, analysis))
    sidecar = os.path.splitext(args.out)[0] + ".eigenvalues.json"
    serialize.atomic_write_text(sidecar, serialize.dumps(serialize.eigenvalues_json(analysis)))
    _progress(args, f"[descriptors] {len(ids)} subjects, {analysis.num_modes} modes -> {args.out}")
    return 0


def _cmd_synth(args) -> int:
    gt = _load_spline(args.spline)
    if args.subjects < 1:
        raise ValueError(f"--subjects must be >= 1, got {args.subjects}")
    spec = SyntheticSpec.shared_times(
        gt, args.sigma, _parse_times(args.times), args.subjects, args.seed
    )
    cohort = synthesize(spec)
    dataset = Dataset(gt.manifold, tuple(cohort))
    serialize.atomic_write_text(args.out, serialize.dumps(serialize.dataset_to_json(dataset)))
    _progress(args, f"[synth] {len(cohort)} subjects -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    B = _load_spline(args.spline)
    times = _parse_times(args.times)
    rows = []
    header = "t" + "".join(f",x{i}" for i in range(B.manifold.ambient_dim))
    rows.append(header)
    for t in times:
        p = eval_spline(B, t)
        rows.append(f"{float(t)!r}" + "".join(f",{float(c)!r}" for c in p.coords))
    text = "\n".join(rows) + "\n"
    if args.out:
        serialize.atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splinetraj",
        description="Longitudinal manifold-valued data analysis with Bezier splines.",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress progress lines on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one spline per subject of a dataset")
    p.add_argument("dataset", help="dataset JSON file")
    p.add_argument("--degrees", required=True, help="comma-separated segment degrees, e.g. 3 or 3,3")
    p.add_argument("--closed", action="store_true", help="fit closed splines")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("mean", help="mean trajectory of subject splines")
    p.add_argument("splines", nargs="+", help="subject spline JSON files")
    p.add_argument("--n", type=int, default=2, help="path discretization parameter")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_mean)

    p = sub.add_parser("geodesic", help="discrete n-geodesic between two splines")
    p.add_argument("spline1")
    p.add_argument("spline2")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--out", help="output JSON file (stdout when omitted)")
    p.set_defaults(func=_cmd_geodesic)

    p = sub.add_parser("distance", help="spline-space distance between two splines")
    p.add_argument("spline1")
    p.add_argument("spline2")
    p.add_argument("--n", type=int, default=2)
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("descriptors", help="PGA score descriptors of subjects around a mean")
    p.add_argument("mean", help="mean spline JSON file")
    p.add_argument("splines", nargs="+", help="subject spline JSON files")
    p.add_argument("--samples-per-segment", type=int, default=5)
    p.add_argument("--out", required=True, help="scores CSV path (eigenvalues JSON sits beside it)")
    p.set_defaults(func=_cmd_descriptors)

    p = sub.add_parser("synth", help="generate a noisy dataset around a ground-truth spline")
    p.add_argument("--spline", required=True, help="ground-truth spline JSON file")
    p.add_argument("--subjects", type=int, required=True)
    p.add_argument("--times", required=True, help="comma-separated sample times for every subject")
    p.add_argument("--sigma", type=float, default=0.0, help="tangent noise standard deviation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="dataset JSON path")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("eval", help="evaluate a spline at given parameters (CSV)")
    p.add_argument("spline")
    p.add_argument("--times", required=True, help="comma-separated parameters in [0, L]")
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(func=_cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (DomainError, ValueError, KeyError, TypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
