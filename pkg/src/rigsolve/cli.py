"""Command-line entry point: ``rigsolve {gen,solve,sweep,eval,inspect}``.

Exit status 0 on success, 1 on a usage error, 2 on a data error and 3 when
``--strict`` is given and some frame did not converge. Failures print one line
``error[CODE]: description`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io as rio
from .metrics import (
    MODELS, PAPER_LAMBDAS, FrameMetrics, cardinality, mesh_error,
    run_sweep, solve_frame, write_csv,
)
from .mm import Init, objective_quadratic
from .qp import qp_objective
from .rig import RigError, evaluate_full
from .spectral import build_cache
from .synth import GenSpec, generate

__all__ = ["cli_main", "main"]

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    code = "E_USAGE"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_threads() -> int:
    raw = os.environ.get("RIGSOLVE_THREADS", "1")
    try:
        val = int(raw)
    except ValueError:
        raise UsageError(f"RIGSOLVE_THREADS must be a positive integer, got {raw!r}") from None
    if val < 1:
        raise UsageError(f"RIGSOLVE_THREADS must be a positive integer, got {raw!r}")
    return val


def _positive_int(text):
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return val


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _name_list(choices):
    def parse(text):
        names = [x.strip() for x in text.split(",") if x.strip()]
        bad = [n for n in names if n not in choices]
        if bad or not names:
            raise argparse.ArgumentTypeError(f"choose from {','.join(choices)}; got {text!r}")
        return names
    return parse


def _build_parser() -> argparse.ArgumentParser:
    threads = _default_threads()
    parser = _Parser(prog="rigsolve", description="Inverse rig solving for blendshape faces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a synthetic rig, targets and ground-truth weights")
    d = GenSpec()
    g.add_argument("--n-vertices", type=_positive_int, default=d.n_vertices)
    g.add_argument("--m", type=_positive_int, default=d.m)
    g.add_argument("--n-pairs", type=int, default=d.n_pairs)
    g.add_argument("--n-triples", type=int, default=d.n_triples)
    g.add_argument("--n-quads", type=int, default=d.n_quads)
    g.add_argument("--n-frames", type=_positive_int, default=d.n_frames)
    g.add_argument("--sparsity", type=float, default=d.sparsity)
    g.add_argument("--correction-scale", type=float, default=d.correction_scale)
    g.add_argument("--noise-std", type=float, default=d.noise_std)
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--absolute", action="store_true", help="store targets in absolute coordinates")
    g.add_argument("--out", required=True, type=Path)

    def data_args(p, weights=False):
        p.add_argument("--rig", required=True, type=Path)
        p.add_argument("--targets", required=True, type=Path)
        if weights:
            p.add_argument("--weights", required=True, type=Path)
        p.add_argument("--frames", type=_positive_int, default=None,
                       help="use only the first N frames")

    def solver_args(p):
        p.add_argument("--eps", type=float, default=1e-6)
        p.add_argument("--max-iters", type=_positive_int, default=200)
        p.add_argument("--threads", type=_positive_int, default=threads)
        p.add_argument("--strict", action="store_true",
                       help="exit with status 3 if any frame fails to converge")

    s = sub.add_parser("solve", help="solve every frame of a target file")
    data_args(s)
    s.add_argument("--model", choices=MODELS, default="quadratic")
    s.add_argument("--init", choices=[i.value for i in Init], default=Init.ZERO.value)
    s.add_argument("--lambda", dest="lam", type=float, default=0.0)
    solver_args(s)
    s.add_argument("--out", required=True, type=Path, help="weights file (sidecar .json + .bin)")
    s.add_argument("--report", type=Path, default=None, help="per-frame CSV report")

    w = sub.add_parser("sweep", help="benchmark over a lambda grid")
    data_args(w)
    w.add_argument("--lambdas", type=_float_list, default=list(PAPER_LAMBDAS))
    w.add_argument("--models", type=_name_list(MODELS), default=list(MODELS))
    w.add_argument("--inits", type=_name_list([i.value for i in Init]),
                   default=[i.value for i in Init])
    solver_args(w)
    w.add_argument("--out", required=True, type=Path)

    e = sub.add_parser("eval", help="metrics for externally produced weights")
    data_args(e, weights=True)
    e.add_argument("--out", required=True, type=Path)

    i = sub.add_parser("inspect", help="print rig dimensions and spectral summary")
    i.add_argument("--rig", required=True, type=Path)
    return parser


def _load(args):
    rig = rio.load_rig(args.rig)
    targets = rio.load_targets(args.targets, rig)
    if args.frames is not None:
        targets = targets[: args.frames]
    return rig, targets


def _cmd_gen(args) -> int:
    spec = GenSpec(
        n_vertices=args.n_vertices, m=args.m, n_pairs=args.n_pairs,
        n_triples=args.n_triples, n_quads=args.n_quads, n_frames=args.n_frames,
        sparsity=args.sparsity, correction_scale=args.correction_scale,
        noise_std=args.noise_std, seed=args.seed,
    )
    try:
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = generate(spec)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    rio.save_rig(data.rig, out)
    rio.save_targets(out / "targets", data.targets, data.rig, absolute=args.absolute)
    rio.save_weights(
        out / "weights_true", data.weights,
        {"solver": "ground_truth", "lambda": None, "init": None,
         "rig_hash": rio.rig_hash(data.rig)},
    )
    (out / "gen.json").write_text(
        json.dumps(spec.to_dict(), indent=1) + "\n", encoding="utf-8", newline="\n"
    )
    print(f"wrote {out}: n_vertices={spec.n_vertices} m={spec.m} frames={spec.n_frames}")
    return EXIT_OK


def _map_frames(fn, n, threads):
    if threads > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(n)))
    return [fn(f) for f in range(n)]


def _cmd_solve(args) -> int:
    rig, targets = _load(args)
    cache = build_cache(rig)
    init = args.init if args.model == "quadratic" else Init.ZERO

    def one(f):
        return solve_frame(
            rig, cache, targets[f], args.lam, args.model, init,
            eps=args.eps, max_iters=args.max_iters, frame=f,
        )

    results = _map_frames(one, targets.shape[0], args.threads)
    weights = np.vstack([r[0] for r in results])
    rows = [r[1] for r in results]
    rio.save_weights(
        args.out, weights,
        {"solver": args.model, "lambda": args.lam,
         "init": args.init if args.model == "quadratic" else None,
         "rig_hash": rio.rig_hash(rig)},
    )
    if args.report is not None:
        write_csv(rows, args.report)
    failed = [r.frame for r in rows if not r.converged]
    if failed:
        print(f"warning: {len(failed)} of {len(rows)} frames did not converge", file=sys.stderr)
        if args.strict:
            _emit("E_NONCONVERGED", f"frames not converged: {failed[:10]}")
            return EXIT_NONCONVERGED
    return EXIT_OK


def _cmd_sweep(args) -> int:
    rig, targets = _load(args)
    cache = build_cache(rig)
    rows = run_sweep(
        rig, cache, targets, args.lambdas, args.models, args.inits,
        threads=args.threads, eps=args.eps, max_iters=args.max_iters,
    )
    errors = [r for r in rows if r.error]
    if errors:
        raise RuntimeError(f"{len(errors)} cells failed; first: {errors[0].error}")
    write_csv(rows, args.out)
    if args.strict and any(not r.converged for r in rows):
        _emit("E_NONCONVERGED", "some sweep cells did not converge")
        return EXIT_NONCONVERGED
    return EXIT_OK


def _cmd_eval(args) -> int:
    rig, targets = _load(args)
    weights, meta = rio.load_weights(args.weights, rig, with_meta=True)
    if weights.shape[0] < targets.shape[0]:
        raise rio.DimensionMismatchError(
            f"{weights.shape[0]} weight frames for {targets.shape[0]} target frames"
        )
    prov = meta["provenance"]
    model = prov.get("solver") or "unknown"
    lam = float(prov.get("lambda") or 0.0)
    init = prov.get("init") or "none"
    cache = build_cache(rig) if model == "quadratic" else None
    rows = []
    for f, target in enumerate(targets):
        w = weights[f]
        if model == "quadratic":
            obj = objective_quadratic(rig, cache, w, target, lam)
        elif model == "linear":
            obj = qp_objective(rig.blendshapes, target, w, lam)
        else:
            res = evaluate_full(rig, w) - target
            obj = float(res @ res + lam * np.sum(w))
        rows.append(FrameMetrics(
            f, lam, model, init, mesh_error(rig, w, target), cardinality(w), 0, 0.0, obj,
        ))
    write_csv(rows, args.out)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    rig = rio.load_rig(args.rig)
    cache = build_cache(rig)
    active = np.count_nonzero(cache.sigma_max)
    lines = [
        f"n_vertices      {rig.n_vertices}",
        f"n_controllers   {rig.m}",
        f"corrections     " + " ".join(
            f"order{t.order}={len(t)}" for t in rig.tables()
        ),
        f"rig_hash        {rio.rig_hash(rig)}",
        f"coords_with_D   {active} of {rig.n_coords}",
        f"lambda_min      {cache.lambda_min.min():.6g}",
        f"lambda_max      {cache.lambda_max.max():.6g}",
        f"sigma_max       {cache.sigma_max.max():.6g}",
        f"s_coefficient   {cache.s_coefficient:.6g}",
    ]
    print("\n".join(lines))
    return EXIT_OK


_COMMANDS = {
    "gen": _cmd_gen, "solve": _cmd_solve, "sweep": _cmd_sweep,
    "eval": _cmd_eval, "inspect": _cmd_inspect,
}


def _emit(code: str, message: str) -> None:
    print(f"error[{code}]: {' '.join(str(message).split())}", file=sys.stderr)


def cli_main(argv=None) -> int:
    """Run the CLI with ``argv`` (defaults to ``sys.argv[1:]``); returns the exit status."""
    try:
        args = _build_parser().parse_args(argv)
    except UsageError as exc:
        _emit(exc.code, exc)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        _emit(exc.code, exc)
        return EXIT_USAGE
    except rio.FormatError as exc:
        _emit(exc.code, Exception.__str__(exc))
        return EXIT_DATA
    except RigError as exc:
        _emit("E_RIG", exc)
        return EXIT_DATA
    except (ValueError, RuntimeError, OSError) as exc:
        _emit("E_DATA", f"{type(exc).__name__}: {exc}")
        return EXIT_DATA


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
