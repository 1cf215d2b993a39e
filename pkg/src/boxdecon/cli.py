"""Command-line interface: ``boxdecon <command> [options]``.

Commands: conv, recover, kernel, phase, scan, tv2d, generate.

Exit codes: 0 success, 2 dimension/parse/usage error, 3 infeasible
measurement, 4 solver failure.  Errors print one line to stderr of the form
``boxdecon: error[<reason>]: <message>``.

Options may also come from ``--config FILE``, a flat ``key=value`` text file
whose keys are option names without leading dashes (``k=4``,
``lambda=0.05``).  Command-line flags override the file, which overrides
built-in defaults.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boxconv import BoxOperator, Mode, apply2d, kernel_basis
from .exceptions import (
    BoxDeconError,
    DimensionError,
    InfeasibleError,
    NumericalError,
    SolverError,
)
from .experiment import (
    ExperimentSpec,
    random_sparse_signal,
    records_to_csv,
    run_experiment,
    summarize,
    summary_to_csv,
)
from .formats import FormatError, is_image_path, read_image, read_signal, write_image, write_signal
from .imaging2d import (
    ScanConfig,
    TvConfig,
    piecewise_constant_target,
    psnr,
    simulate_scan,
    tv_reconstruct,
)
from .recovery import basis_pursuit, sparse_derivative_recover

EXIT_OK, EXIT_DIMENSION, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4

DEFAULTS = {
    "k": None,
    "n": None,
    "mode": "valid",
    "objective": "l1",
    "sparsity": "1",
    "trials": 100,
    "seed": 0,
    "lambda": 1e-2,
    "iters": 5000,
    "tol": 1e-7,
    "noise": 0.0,
    "jobs": 1,
    "size": 64,
    "rects": 4,
    "kind": "signal",
}

_CASTS = {
    "k": int, "n": str, "trials": int, "seed": int, "lambda": float, "iters": int,
    "tol": float, "noise": float, "jobs": int, "size": int, "rects": int,
}


class UsageError(DimensionError):
    reason = "usage"


def load_config(path):
    """Parse a flat ``key=value`` file; ``#`` starts a comment line."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _resolve(args, name):
    """Flag value, else config value, else default."""
    dest = name.replace("-", "_")
    value = getattr(args, "lambda_" if name == "lambda" else dest, None)
    if value is not None:
        return value
    cfg = args._config
    if dest in cfg:
        cast = _CASTS.get(name, str)
        try:
            return cast(cfg[dest])
        except ValueError:
            raise FormatError(f"config value for {name!r} is not valid: {cfg[dest]!r}") from None
    return DEFAULTS.get(name)


def _int_list(text):
    """Parse ``"4"``, ``"12,20"`` or ``"1-6"`` (inclusive) into a tuple of ints."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        span = re.fullmatch(r"(\d+)\s*-\s*(\d+)", part)
        if span:
            out.extend(range(int(span.group(1)), int(span.group(2)) + 1))
        elif re.fullmatch(r"\d+", part):
            out.append(int(part))
        elif part:
            raise UsageError(f"cannot parse integer list {text!r}")
    if not out:
        raise UsageError(f"empty integer list {text!r}")
    return tuple(out)


def _require_k(args):
    k = _resolve(args, "k")
    if k is None:
        raise UsageError("--k is required")
    return int(k)


def _fmt(v):
    return format(float(v), ".10g")


# ---------------------------------------------------------------------------
# commands


def cmd_conv(args):
    k = _require_k(args)
    mode = Mode(_resolve(args, "mode"))
    if is_image_path(args.input):
        if mode is not Mode.VALID:
            raise UsageError("2D convolution supports only --mode valid")
        x = read_image(args.input)
        y = apply2d(x, k)
        print(f"conv: image {x.shape[0]}x{x.shape[1]} k={k} -> {y.shape[0]}x{y.shape[1]}")
        if args.out:
            write_image(args.out, y)
        return EXIT_OK
    x = read_signal(args.input)
    y = BoxOperator(k, x.size, mode).apply(x)
    print(f"conv: n={x.size} k={k} mode={mode.value} -> {y.size} values")
    if args.out:
        write_signal(args.out, y)
    else:
        for v in y:
            print(_fmt(v))
    return EXIT_OK


def cmd_recover(args):
    k = _require_k(args)
    mode = Mode(_resolve(args, "mode"))
    objective = _resolve(args, "objective")
    y = read_signal(args.input)
    n_opt = _resolve(args, "n")
    n = y.size + k - 1 if mode is Mode.VALID else y.size
    if n_opt is not None and int(n_opt) != n:
        raise DimensionError(
            f"--n {n_opt} inconsistent with {y.size} measurements for k={k}, mode={mode.value}"
        )
    op = BoxOperator(k, n, mode)
    if objective == "l1":
        res = basis_pursuit(op, y)
    elif objective == "tv1d":
        res = sparse_derivative_recover(op, y)
    else:
        raise UsageError(f"unknown objective {objective!r}")
    print(f"verdict: {res.unique.value}")
    print(f"objective: {_fmt(res.objective)}")
    print(f"l1_norm: {_fmt(res.l1_norm)}")
    print(f"residual: {res.residual:.3g}")
    if res.certificate is not None:
        for label, point in zip(("witness_a", "witness_b"), res.certificate):
            print(f"{label}: " + " ".join(_fmt(v) for v in point))
    if args.out:
        write_signal(args.out, res.xhat)
    else:
        print("xhat: " + " ".join(_fmt(v) for v in res.xhat))
    return EXIT_OK


def cmd_kernel(args):
    k = _require_k(args)
    n_opt = _resolve(args, "n")
    if n_opt is None:
        raise UsageError("--n is required")
    n = int(n_opt)
    mode = Mode(_resolve(args, "mode"))
    basis = kernel_basis(k, n, mode)
    if basis.dim == 0:
        print(f"kernel is trivial (k={k}, n={n}, mode={mode.value})")
        return EXIT_OK
    op = BoxOperator(k, n, mode)
    print(f"kernel basis: dim={basis.dim} (k={k}, n={n}, mode={mode.value})")
    ok = 0
    for v in basis:
        zero = not np.any(op.apply(v))
        ok += zero
        print(" ".join(f"{int(x):d}" for x in v))
    status = "ok" if ok == basis.dim else "FAILED"
    print(f"check: operator maps {ok}/{basis.dim} basis vectors to zero [{status}]")
    return EXIT_OK if ok == basis.dim else EXIT_SOLVER


def cmd_phase(args):
    spec = ExperimentSpec(
        n_list=_int_list(_resolve(args, "n") or "24"),
        k_list=_int_list(_require_k_text(args)),
        sparsities=_int_list(_resolve(args, "sparsity")),
        trials=int(_resolve(args, "trials")),
        seed=int(_resolve(args, "seed")),
        mode=Mode(_resolve(args, "mode")),
        adversarial=args.adversarial,
    )
    records = run_experiment(spec, jobs=int(_resolve(args, "jobs")))
    rows = summarize(records)
    out = Path(args.out or "phase.csv")
    out.write_text(records_to_csv(records, timing=args.timing), encoding="utf-8")
    summary_path = out.with_name(out.stem + ".summary.csv")
    summary_path.write_text(summary_to_csv(rows), encoding="utf-8")
    print(f"{'n':>4} {'k':>3} {'s':>3} {'rate':>6} {'ties':>5} {'n//k':>5} {'n/(2(k-1))':>11}")
    for r in rows:
        print(
            f"{r['n']:>4} {r['k']:>3} {r['sparsity']:>3} {r['rate']:>6.3f} {r['ties']:>5} "
            f"{r['bound_floor_n_over_k']:>5} {r['bound_n_over_2km1']:>11.3f}"
        )
    print(f"wrote {out} ({len(records)} trials) and {summary_path}")
    return EXIT_OK


def _require_k_text(args):
    k = args.k if args.k is not None else args._config.get("k")
    if k is None:
        raise UsageError("--k is required")
    return k


def _measurement_from_file(path, k):
    y = read_image(path)
    # PGM measurements hold window means so they fit the sample range
    if Path(path).suffix.lower() == ".pgm":
        y = y * (k * k)
    return y


def cmd_scan(args):
    k = _require_k(args)
    seed = int(_resolve(args, "seed"))
    if args.input:
        target = read_image(args.input)
    else:
        size = int(_resolve(args, "size"))
        target = piecewise_constant_target(size, int(_resolve(args, "rects")), seed)
    y = simulate_scan(target, ScanConfig(k, float(_resolve(args, "noise"))), seed)
    print(f"scan: target {target.shape[0]}x{target.shape[1]} k={k} -> measurement {y.shape[0]}x{y.shape[1]}")
    out = args.out or "measurement.bdf"
    write_image(out, y / (k * k) if Path(out).suffix.lower() == ".pgm" else y)
    if args.target_out:
        write_image(args.target_out, target)
    return EXIT_OK


def cmd_tv2d(args):
    k = _require_k(args)
    y = _measurement_from_file(args.input, k)
    h, w = y.shape[0] + k - 1, y.shape[1] + k - 1
    cfg = TvConfig(
        lam=float(_resolve(args, "lambda")),
        max_iters=int(_resolve(args, "iters")),
        tol=float(_resolve(args, "tol")),
    )
    res = tv_reconstruct(y, k, h, w, cfg)
    print(
        f"tv2d: {y.shape[0]}x{y.shape[1]} -> {h}x{w} lambda={cfg.lam:g} "
        f"iterations={res.iterations} converged={str(res.converged).lower()} "
        f"objective={_fmt(res.objective)}"
    )
    out = args.out or "reconstruction.bdf"
    write_image(out, res.image)
    if args.target:
        # score what was written, so PGM quantization counts
        saved = read_image(out)
        value = psnr(saved, read_image(args.target), peak=1.0)
        print(f"psnr: {'inf' if math.isinf(value) else f'{value:.2f}'} dB")
    if args.log:
        lines = ["iteration,objective,raw_objective,change"]
        lines += [
            f"{e['iteration']},{e['objective']:.12g},{e['raw_objective']:.12g},{e['change']:.6g}"
            for e in res.log
        ]
        Path(args.log).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_generate(args):
    kind = _resolve(args, "kind")
    seed = int(_resolve(args, "seed"))
    rng = np.random.default_rng(seed)
    if kind == "signal":
        n_opt = _resolve(args, "n")
        if n_opt is None:
            raise UsageError("--n is required for --kind signal")
        n = int(n_opt)
        s = _int_list(_resolve(args, "sparsity"))[0]
        if s > n:
            raise DimensionError(f"sparsity {s} exceeds n={n}")
        x = random_sparse_signal(n, s, rng)
        if args.out:
            write_signal(args.out, x)
        else:
            for v in x:
                print(_fmt(v))
        return EXIT_OK
    if kind == "image":
        img = piecewise_constant_target(int(_resolve(args, "size")), int(_resolve(args, "rects")), seed)
        write_image(args.out or "target.pgm", img)
        print(f"generate: image {img.shape[0]}x{img.shape[1]}")
        return EXIT_OK
    raise UsageError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # keep usage errors on the same one-line format as the rest
    def error(self, message):
        self.exit(EXIT_DIMENSION, f"boxdecon: error[usage]: {message}\n")


def build_parser():
    parser = _Parser(
        prog="boxdecon",
        description="Sparse recovery and super-resolution from box-filtered data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *names):
        p.add_argument("--config", help="flat key=value option file")
        p.add_argument("--out", help="output path")
        for name in names:
            if name == "k":
                p.add_argument("--k", help="box width")
            elif name == "n":
                p.add_argument("--n", help="signal length (list allowed for phase)")
            elif name == "mode":
                p.add_argument("--mode", choices=[m.value for m in Mode])
            elif name == "seed":
                p.add_argument("--seed", type=int)
        return p

    p = common(sub.add_parser("conv", help="apply the box operator to a signal or image"), "k", "mode")
    p.add_argument("input")
    p.set_defaults(func=cmd_conv)

    p = common(sub.add_parser("recover", help="recover a sparse signal from its measurement"),
               "k", "n", "mode")
    p.add_argument("input")
    p.add_argument("--objective", choices=["l1", "tv1d"])
    p.set_defaults(func=cmd_recover)

    p = common(sub.add_parser("kernel", help="print a basis of the operator kernel"), "k", "n", "mode")
    p.set_defaults(func=cmd_kernel)

    p = common(sub.add_parser("phase", help="recovery-rate experiment, CSV output"),
               "k", "n", "mode", "seed")
    p.add_argument("--sparsity", help="list such as 1-6 or 2,4")
    p.add_argument("--trials", type=int)
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--adversarial", action="store_true",
                   help="at sparsity n/k use equal-norm residue-class signals")
    p.add_argument("--timing", action="store_true", help="add a wall_time column")
    p.set_defaults(func=cmd_phase)

    p = common(sub.add_parser("scan", help="simulate a pixel-shift scan of a target image"),
               "k", "seed")
    p.add_argument("input", nargs="?", help="target image; omit to use a synthetic target")
    p.add_argument("--noise", type=float, help="Gaussian noise sigma")
    p.add_argument("--size", type=int, help="synthetic target size")
    p.add_argument("--rects", type=int, help="synthetic target rectangles")
    p.add_argument("--target-out", help="also write the target image here")
    p.set_defaults(func=cmd_scan)

    p = common(sub.add_parser("tv2d", help="TV-regularized reconstruction from a scan"), "k", "seed")
    p.add_argument("input")
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--target", help="ground truth for PSNR")
    p.add_argument("--log", help="write the convergence log as CSV")
    p.set_defaults(func=cmd_tv2d)

    p = common(sub.add_parser("generate", help="write a random sparse signal or synthetic image"),
               "n", "seed")
    p.add_argument("--kind", choices=["signal", "image"])
    p.add_argument("--sparsity")
    p.add_argument("--size", type=int)
    p.add_argument("--rects", type=int)
    p.set_defaults(func=cmd_generate)
    return parser


def _exit_code(err):
    if isinstance(err, InfeasibleError):
        return EXIT_INFEASIBLE
    if isinstance(err, (SolverError, NumericalError)):
        return EXIT_SOLVER
    return EXIT_DIMENSION


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args._config = load_config(args.config) if getattr(args, "config", None) else {}
        return args.func(args)
    except (BoxDeconError, ValueError, OSError) as err:
        reason = getattr(err, "reason", "io" if isinstance(err, OSError) else "dimension")
        message = " ".join(str(err).split())
        print(f"boxdecon: error[{reason}]: {message}", file=sys.stderr)
        return _exit_code(err)


if __name__ == "__main__":
    sys.exit(main())
