"""Command-line front end: invariants, model geometry, embeddings and obstruction checks.

Exit codes: 0 success, 1 input error, 2 obstructed or failed contract.
JSON reports have sorted keys, a ``"schema": "1"`` field and floats in
shortest round-trip form.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ContractError, IsostatError, ObstructedError, TensorFormatError
from .invariants import OptimizerConfig, comass1, compute_invariants, obstruction_check
from .models import (
    connection,
    divergence_geometry,
    duality_defect,
    geometry,
    kl_divergence,
    model_from_spec,
    quadratic_divergence,
)
from .symtensor import MetricMatrix, SymTensor3, project_trace, standard_tensor, trace_type_tensor

DEFAULT_SEED = 2007
EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class InputError(Exception):
    """Bad command-line input; reported with exit code 1."""


# -- I/O helpers --------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, SymTensor3):
        return obj.to_json_dict()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps_report(report: dict) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, shortest round-trip floats."""
    return json.dumps(_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def read_json(path: str):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None


def read_tensor(path: str) -> SymTensor3:
    return SymTensor3.from_json_dict(read_json(path))


def read_matrix(path: str) -> np.ndarray:
    data = read_json(path)
    if isinstance(data, dict):
        data = data.get("matrix", data.get("entries"))
    try:
        M = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{path}: expected a matrix as a list of rows") from None
    if M.ndim != 2:
        raise InputError(f"{path}: expected a matrix as a list of rows")
    return M


def parse_vector(text: str, name: str) -> np.ndarray:
    try:
        vals = json.loads(text) if text.lstrip().startswith("[") else [float(s) for s in text.split(",")]
        v = np.array(vals, dtype=float).ravel()
    except (ValueError, TypeError, json.JSONDecodeError):
        raise InputError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise InputError(f"--{name}: expected finite numbers, got {text!r}")
    return v


def emit_plot_data(report: dict) -> str:
    """Flat ``label,x,y`` CSV of every series in ``report["series"]``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "x", "y"])
    for label in sorted((report or {}).get("series", {})):
        xs, ys = report["series"][label]
        for x, y in zip(xs, ys):
            w.writerow([label, repr(float(x)), repr(float(y))])
    return buf.getvalue()


def _write(args, text: str) -> None:
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)


def _emit(args, report: dict) -> None:
    fmt = args.format or "json"
    _write(args, emit_plot_data(report) if fmt == "csv" else dumps_report(report))


def _cfg(args) -> OptimizerConfig:
    kw = {"seed": args.seed}
    if getattr(args, "grid", None):
        kw["grid_resolution"] = args.grid
    if getattr(args, "starts", None):
        kw["multistart_count"] = args.starts
    return OptimizerConfig(**kw)


def _tol(args, default: float) -> float:
    return default if args.tol is None else args.tol


# -- subcommands --------------------------------------------------------------


def cmd_tensor_invariants(args) -> int:
    T = read_tensor(args.input)
    rep = compute_invariants(T, _cfg(args), lambdas=not args.no_lambda)
    out = rep.to_json_dict()
    out["series"] = {
        "comass": ([1, 2, 3], [rep.comass1, rep.comass2, rep.comass3]),
        "lambda": (sorted(rep.lam), [rep.lam[k] for k in sorted(rep.lam)]),
    }
    _emit(args, out)
    return EXIT_OK


def cmd_tensor_project(args) -> int:
    T = read_tensor(args.input)
    d = project_trace(T)
    _emit(
        args,
        {
            "schema": "1",
            "dim": T.dim,
            "trace_vector": d.trace_vector,
            "residual_norm": d.residual_norm,
            "primitive": d.primitive,
            "trace_part": d.trace_part,
        },
    )
    return EXIT_OK


def cmd_tensor_canon2d(args) -> int:
    from .embeddings import canonical_form_2d

    T = read_tensor(args.input)
    if T.dim != 2:
        raise InputError(f"tensor-canon2d needs a tensor on R^2, got dimension {T.dim}")
    c = canonical_form_2d(T, _cfg(args))
    _emit(args, {"schema": "1", "rotation": c.rotation, "coords": list(c.coords), "zero": c.zero})
    return EXIT_OK


def _model_and_theta(args):
    model = model_from_spec(read_json(args.model))
    theta = parse_vector(args.theta, "theta")
    if theta.size != model.param_dim:
        raise InputError(f"--theta has {theta.size} entries, the model has {model.param_dim} parameters")
    return model, theta


def cmd_model_geometry(args) -> int:
    model, theta = _model_and_theta(args)
    geo = geometry(model, theta)
    _emit(args, {"schema": "1", "model": model.name, "point": geo.point, "metric": geo.metric.entries, "tensor": geo.tensor})
    return EXIT_OK


def cmd_model_connection(args) -> int:
    model, theta = _model_and_theta(args)
    c = connection(model, args.t, theta)
    defect = duality_defect(model, args.t, theta)
    tol = _tol(args, 1e-5)
    ok = defect <= tol
    _emit(
        args,
        {
            "schema": "1",
            "model": model.name,
            "t": args.t,
            "point": c.point,
            "christoffel": c.christoffel,
            "duality_defect": defect,
            "verdict": "ok" if ok else "contract failed",
        },
    )
    return EXIT_OK if ok else EXIT_FAIL


def cmd_divergence_check(args) -> int:
    if args.divergence == "quadratic":
        theta = parse_vector(args.theta, "theta")
        div = quadratic_divergence(theta.size)
        g_ref, T_ref = np.eye(theta.size), SymTensor3.zeros(theta.size)
        label = "quadratic"
    else:
        if not args.model:
            raise InputError("divergence-check --divergence kl needs --model")
        model, theta = _model_and_theta(args)
        ref = geometry(model, theta)
        div = kl_divergence(model)
        g_ref, T_ref = ref.metric.entries, ref.tensor
        label = div.name
    got = divergence_geometry(div, theta, h=args.step)
    me = float(np.max(np.abs(got.metric.entries - g_ref)))
    te = got.tensor.max_abs_diff(T_ref)
    mtol = args.metric_tol if args.metric_tol is not None else _tol(args, 1e-4)
    ttol = args.tensor_tol if args.tensor_tol is not None else _tol(args, 1e-3)
    ok = me <= mtol and te <= ttol
    _emit(
        args,
        {
            "schema": "1",
            "divergence": label,
            "point": theta,
            "metric": got.metric.entries,
            "tensor": got.tensor,
            "metric_error": me,
            "tensor_error": te,
            "verdict": "ok" if ok else "contract failed",
        },
    )
    return EXIT_OK if ok else EXIT_FAIL


def _embed(args):
    """Build the requested map and the fields its pullbacks must reproduce."""
    from . import embeddings as E

    v = args.variant
    if v == "trace-type":
        if args.w is None or args.v is None:
            raise InputError("--variant trace-type needs --w and --v")
        w, vv = parse_vector(args.w, "w"), parse_vector(args.v, "v")
        return E.embed_trace_type(w, vv), np.eye(w.size), trace_type_tensor(w)
    if v == "line":
        if args.c is None or not args.target:
            raise InputError("--variant line needs --c and --target")
        return E.embed_line(args.c, read_tensor(args.target), _cfg(args)), np.eye(1), standard_tensor(1, args.c)
    if v == "2d-cross":
        if args.a2 is None:
            raise InputError("--variant 2d-cross needs --a2")
        f = E.embed_2d_cross(args.a2)
        return f, f.meta["pullback_metric"], f.meta["pullback_tensor"]
    if v == "null":
        if args.m is None or args.m < 1:
            raise InputError("--variant null needs --m >= 1")
        return E.null_embedding(args.m), np.eye(args.m), SymTensor3.zeros(args.m)
    if v == "constant":
        if not args.input:
            raise InputError("--variant constant needs --in")
        T = read_tensor(args.input)
        g = read_matrix(args.metric) if args.metric else np.eye(T.dim)
        MetricMatrix(g)
        return E.embed_constant_structure(g, T, args.scale), g, T
    raise InputError(f"unknown variant {v!r}")


def cmd_embed(args) -> int:
    from .embeddings import sample_box, verify_pullback

    f, g, T = _embed(args)
    rep = verify_pullback(f, g, T, sample_box(f.source_dim, args.points, seed=args.seed))
    tol = _tol(args, 1e-10)
    ok = rep.ok(tol, tol)
    meta = {k: val for k, val in f.meta.items() if k not in ("pullback_metric", "pullback_tensor")}
    out = {
        "schema": "1",
        "variant": args.variant,
        "map": f.to_json_dict(),
        "expected": {"metric": g, "tensor": T},
        "verification": rep.to_json_dict(),
        "meta": meta,
        "verdict": "ok" if ok else "contract failed",
    }
    if args.variant == "2d-cross":
        diag_ok = abs(g[0, 1]) <= tol
        out["contract"] = {"metric_diagonal": diag_ok, "off_form": meta["off_form"]}
        ok = ok and diag_ok and meta["off_form"] <= tol
        out["verdict"] = "ok" if ok else "contract failed"
    _emit(args, out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    from .embeddings import EmbeddingMap, sample_box, verify_pullback

    data = read_json(args.map)
    expected_T, g = None, None
    if isinstance(data, dict) and "map" in data:
        exp = data.get("expected") or {}
        if "tensor" in exp:
            expected_T = SymTensor3.from_json_dict(exp["tensor"])
        if "metric" in exp:
            try:
                g = np.array(exp["metric"], dtype=float)
            except (TypeError, ValueError):
                raise InputError(f"{args.map}: expected metric must be a list of rows") from None
        data = data["map"]
    f = EmbeddingMap.from_json_dict(data)
    if args.expected_tensor:
        expected_T = read_tensor(args.expected_tensor)
    if expected_T is None:
        raise InputError("verify needs --expected-tensor (or an embed report carrying the expected fields)")
    if args.expected_metric:
        g = read_matrix(args.expected_metric)
    elif g is None:
        g = np.eye(f.source_dim)
    if g.shape != (f.source_dim,) * 2 or expected_T.dim != f.source_dim:
        raise InputError(f"expected fields must have dimension {f.source_dim}")
    rep = verify_pullback(f, g, expected_T, sample_box(f.source_dim, args.points, seed=args.seed))
    tol = _tol(args, 1e-10)
    ok = rep.ok(tol, tol)
    out = rep.to_json_dict()
    out["verdict"] = "ok" if ok else "contract failed"
    out["series"] = {
        "metric_error": (list(range(len(rep.metric_errors))), rep.metric_errors),
        "tensor_error": (list(range(len(rep.tensor_errors))), rep.tensor_errors),
    }
    _emit(args, out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_obstruct(args) -> int:
    verdict = obstruction_check(args.source, args.target, tol=_tol(args, 1e-6), cfg=_cfg(args))
    out = verdict.to_json_dict()
    series = {}
    for side in (verdict.source, verdict.target):
        for k, (xs, ys) in side.profile.items():
            series[f"{side.label}/{k}"] = (xs, ys)
    out["series"] = series
    _emit(args, out)
    return EXIT_FAIL if verdict.impossible else EXIT_OK


def cmd_demo_cap_curve(args) -> int:
    from .embeddings import CapEmbeddingParams, curve_into_cap4, product_into_cap, sample_box, verify_pullback

    params = CapEmbeddingParams(args.n, args.A, step=args.step, R=args.R)
    curve = curve_into_cap4(params)
    tol = _tol(args, 1e-4)
    report = {
        "schema": "1",
        "A": args.A,
        "R": args.R,
        "n": args.n,
        "nodes": int(curve.t.size),
        "max_speed_error": float(curve.speed_error.max()),
        "max_tensor_error": float(curve.tensor_error.max()),
        "max_sphere_error": float(np.max(np.abs(np.linalg.norm(curve.points, axis=1) - params.radius))),
        "branch_switches": curve.branch_switches,
        "torus_radii": [curve.torus.major_radius, curve.torus.rho_c * curve.torus.r0],
        "interpolation": "partial RK4 step from the nearest node on the torus",
        "series": {
            "speed_error": (curve.t, curve.speed_error),
            "tensor_error": (curve.t, curve.tensor_error),
        },
    }
    ok = report["max_speed_error"] <= min(tol, 1e-5) and report["max_tensor_error"] <= tol
    if args.n > 1:
        f = product_into_cap(params, curve)
        pts = sample_box(args.n, args.points, 0.0, args.R, seed=args.seed)
        rep = verify_pullback(f, np.eye(args.n), standard_tensor(args.n, args.A), pts)
        report["product"] = rep.to_json_dict()
        ok = ok and rep.ok(tol, tol)
    report["verdict"] = "ok" if ok else "contract failed"
    fmt = args.format or "csv"
    if fmt == "csv":
        _write(args, curve.to_csv())
    else:
        report["polyline"] = curve.points
        report["t"] = curve.t
        _write(args, dumps_report(report))
    if args.report:
        Path(args.report).write_text(dumps_report(report))
    if args.plot_data:
        Path(args.plot_data).write_text(emit_plot_data(report))
    summary = {k: report[k] for k in ("verdict", "max_speed_error", "max_tensor_error", "branch_switches")}
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


# -- argument parsing ---------------------------------------------------------


def _positive(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return x


def _nonneg(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not x >= 0:
        raise argparse.ArgumentTypeError(f"expected a number >= 0, got {text!r}")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--tol", type=_positive, default=None, help="override the command's contract tolerance")
    common.add_argument("--format", choices=("json", "csv"), default=None, help="report format")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    opt = argparse.ArgumentParser(add_help=False)
    opt.add_argument("--grid", type=int, default=None, help="seeding grid resolution")
    opt.add_argument("--starts", type=int, default=None, help="number of local refinements")

    p = argparse.ArgumentParser(prog="isostat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"isostat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("tensor-invariants", parents=[common, opt], help="comass, norms, lambda_k, a1, a2")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--no-lambda", action="store_true", help="skip the lambda_k min-max values")
    s.set_defaults(func=cmd_tensor_invariants)

    s = sub.add_parser("tensor-project", parents=[common], help="primitive / trace-type split")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_tensor_project)

    s = sub.add_parser("tensor-canon2d", parents=[common, opt], help="canonical coordinates of a tensor on R^2")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_tensor_canon2d)

    s = sub.add_parser("model-geometry", parents=[common], help="Fisher metric and Amari-Chentsov tensor")
    s.add_argument("--model", required=True)
    s.add_argument("--theta", required=True)
    s.set_defaults(func=cmd_model_geometry)

    s = sub.add_parser("model-connection", parents=[common], help="Christoffel symbols of nabla^t and duality check")
    s.add_argument("--model", required=True)
    s.add_argument("--theta", required=True)
    s.add_argument("--t", type=float, default=1.0)
    s.set_defaults(func=cmd_model_connection)

    s = sub.add_parser("divergence-check", parents=[common], help="metric and tensor induced by a divergence")
    s.add_argument("--divergence", choices=("kl", "quadratic"), default="kl")
    s.add_argument("--model", default=None)
    s.add_argument("--theta", required=True)
    s.add_argument("--step", type=_positive, default=1e-3)
    s.add_argument("--metric-tol", type=_positive, default=None)
    s.add_argument("--tensor-tol", type=_positive, default=None)
    s.set_defaults(func=cmd_divergence_check)

    s = sub.add_parser("embed", parents=[common, opt], help="construct and verify an explicit map")
    s.add_argument("--variant", required=True, choices=("trace-type", "line", "2d-cross", "null", "constant"))
    s.add_argument("--w")
    s.add_argument("--v")
    s.add_argument("--c", type=float)
    s.add_argument("--target", help="target tensor JSON for --variant line")
    s.add_argument("--a2", type=float)
    s.add_argument("--m", type=int)
    s.add_argument("--in", dest="input", help="source tensor JSON for --variant constant")
    s.add_argument("--metric", help="source metric JSON (list of rows) for --variant constant")
    s.add_argument("--scale", type=_positive, default=None)
    s.add_argument("--points", type=int, default=50)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("verify", parents=[common], help="check the pullbacks of a linear map")
    s.add_argument("--map", required=True)
    s.add_argument("--expected-tensor")
    s.add_argument("--expected-metric")
    s.add_argument("--points", type=int, default=50)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("obstruct", parents=[common, opt], help="monotone-invariant obstruction check")
    s.add_argument("--source", required=True, help="cap:N, gaussian-product:m, report:PATH or tensor:PATH")
    s.add_argument("--target", required=True)
    s.set_defaults(func=cmd_obstruct)

    s = sub.add_parser("demo-cap-curve", parents=[common], help="curve (or box) of constant cubic value in Cap")
    s.add_argument("--A", type=_nonneg, default=1.0)
    s.add_argument("--R", type=_positive, default=1.0)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--step", type=_positive, default=None)
    s.add_argument("--points", type=int, default=50)
    s.add_argument("--report", default=None, help="also write the JSON report here")
    s.add_argument("--plot-data", default=None, help="write label,x,y error series here")
    s.set_defaults(func=cmd_demo_cap_curve)
    return p


def _check_threads() -> None:
    raw = os.environ.get("ISOSTAT_THREADS")
    if raw is not None and not raw.strip().isdigit():
        raise InputError(f"ISOSTAT_THREADS must be a non-negative integer, got {raw!r}")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        _check_threads()
        if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
            raise InputError("--n must be >= 1")
        if getattr(args, "points", 1) < 1:
            raise InputError("--points must be >= 1")
        return args.func(args)
    except (ObstructedError, ContractError) as exc:
        cond = getattr(exc, "condition", "") or type(exc).__name__
        verdict = "obstructed" if isinstance(exc, ObstructedError) else "contract failed"
        if isinstance(exc, ObstructedError) or args.format != "csv":
            _write(args, dumps_report({"schema": "1", "verdict": verdict, "condition": cond, "reason": str(exc)}))
        print(f"isostat: {verdict}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InputError, TensorFormatError, IsostatError, ValueError, OSError) as exc:
        print(f"isostat: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
