"""Command-line front end.

Every subcommand writes a JSON report carrying ``schema_version`` and a
``manifest`` (configuration echo, seed, library version, wall-clock time and
the interpretation flags in effect). The exit code is 0 when every solve
converged and 2 when some solve stopped at its iteration limit; errors exit
with 1.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import SampleBatch, SolverConfig, uniform_measure
from .costs import CostKind, pairwise_cost
from .exceptions import WdistError
from .generative import TrainConfig, manifold_grid, tile_images, train_toy_generator
from .ingest import load_cifar10, load_csv, load_idx, synth_blobs, write_csv, write_pgm
from .lipschitz.critic import MlpCritic
from .lipschitz.spectral import (
    ConvOperator,
    PowerState,
    materialize_conv,
    reshaped_kernel_norm,
    spectral_norm_conv,
    spectral_norm_matrix,
)
from .lipschitz.training import AdamState, fit_critic, toy_problem
from .rng import make_rng
from .solvers import canonical_solver, solve
from .verification import MAX_ORACLE_SIZE, certify, exact_uniform_wasserstein

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2

DESIGN_FLAGS = {
    "pdhg_stop": "marginal residual, duality gap and dual violation all <= tol",
    "pdhg_potentials": "alpha = -lambda1, beta = -lambda2",
    "sinkhorn_init": "b = 1",
    "sinkhorn_center_kernel": "entrywise product of center and Gibbs kernel",
    "sinkhorn_center_init": "independent coupling",
    "sinkhorn_center_scaling": "b reset to 1 every outer step",
    "fista_center_update": "center included",
    "fista_center_momentum": "restarted every outer step",
    "divergence_terms": "regularized objectives",
    "sn_layer_backward": "sigma treated as a constant",
}
POWER_ITERS = 500
MATERIALIZE_MAX = 1024


class UsageError(WdistError):
    pass


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else str(obj)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _manifest(args, started):
    config = {k: v for k, v in vars(args).items() if k != "handler"}
    return {
        "subcommand": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "library_version": __version__,
        "wall_clock_seconds": time.perf_counter() - started,
        "design_flags": dict(DESIGN_FLAGS),
    }


def _write_report(args, started, body):
    report = {"schema_version": SCHEMA_VERSION, **body, "manifest": _manifest(args, started)}
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def _write_rows(path, header, rows):
    if path is None:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def load_batch(path, fmt="auto"):
    """Load a batch, choosing the reader from ``fmt`` or the file name."""
    name = str(path).lower()
    if fmt == "auto":
        if name.endswith(".csv"):
            fmt = "csv"
        elif name.endswith(".bin"):
            fmt = "cifar10"
        elif "idx" in name or "ubyte" in name:
            fmt = "idx"
        else:
            fmt = "csv"
    return {"csv": load_csv, "idx": load_idx, "cifar10": load_cifar10}[fmt](path)


def _config(args):
    return SolverConfig(
        epsilon=args.eps, max_iter=args.max_iter, tol=args.tol, inner_iter=args.inner,
        tau=args.tau, log_domain=args.log_domain,
    )


def _oracle(C):
    n, m = C.shape
    if n == m and n <= MAX_ORACLE_SIZE:
        return exact_uniform_wasserstein(C)[0]
    return None


def cmd_solve(args):
    started = time.perf_counter()
    X = load_batch(args.x, args.format)
    Y = load_batch(args.y, args.format)
    C = pairwise_cost(X, Y, args.cost)
    mu, nu = uniform_measure(X.n), uniform_measure(Y.n)
    plan, potentials, report = solve(C, mu, nu, args.solver, _config(args), args.outer)
    cert = None if potentials is None else certify(plan, potentials, C, mu, nu).to_dict()
    _write_report(args, started, {"report": report.to_dict(), "certificate": cert})
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _bench_problem(args):
    if args.x and args.y:
        return load_batch(args.x, args.format), load_batch(args.y, args.format)
    rng = make_rng(args.seed, "bench-eps")
    return SampleBatch(rng.random((args.n, 2))), SampleBatch(rng.random((args.n, 2)))


def cmd_bench_eps(args):
    started = time.perf_counter()
    if not args.eps_grid:
        raise UsageError("empty epsilon grid")
    solvers = [canonical_solver(s) for s in args.solvers.split(",") if s.strip()]
    if not solvers:
        raise UsageError("empty solver list")
    X, Y = _bench_problem(args)
    C = pairwise_cost(X, Y, args.cost)
    mu, nu = uniform_measure(X.n), uniform_measure(Y.n)
    oracle = _oracle(C)
    rows, runs, converged = [], [], True
    for solver in solvers:
        for eps in args.eps_grid:
            cfg = _config(args).replace(epsilon=eps)
            _, _, report = solve(C, mu, nu, solver, cfg, args.outer)
            error = None if oracle is None else abs(report.distance - oracle)
            rows.append((solver, eps, report.distance, report.iterations, report.converged))
            runs.append({"solver": solver, "epsilon": eps, "error": error, **report.to_dict()})
            converged &= report.converged
    _write_rows(args.csv, ("solver", "epsilon", "distance", "iterations", "converged"), rows)
    _write_report(args, started, {"oracle": oracle, "runs": runs})
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def _draw_pair(args, data, size, trial):
    if args.source == "blobs":
        n_per = -(-2 * size // len(args.centers))
        data = synth_blobs(args.centers, args.scale, n_per, (args.seed, trial))
    if 2 * size > data.n:
        raise UsageError(f"size {size} needs {2 * size} samples, source has {data.n}")
    order = make_rng(args.seed, "bench-batch", size, trial).permutation(data.n)
    return data.take(order[:size]), data.take(order[size : 2 * size])


def cmd_bench_batch(args):
    started = time.perf_counter()
    if not args.sizes:
        raise UsageError("empty size list")
    data = None
    if args.source == "cifar10":
        if not args.data:
            raise UsageError("--data is required for the cifar10 source")
        data = load_cifar10(args.data)
    rows, means, converged = [], [], True
    for size in args.sizes:
        dists = []
        for trial in range(args.trials):
            X, Y = _draw_pair(args, data, size, trial)
            C = pairwise_cost(X, Y, args.cost)
            w = uniform_measure(size)
            _, _, report = solve(C, w, w, args.solver, _config(args), args.outer)
            rows.append((size, trial, report.distance, report.iterations))
            dists.append(report.distance)
            converged &= report.converged
        means.append(float(np.mean(dists)))
    slope = None
    if len(args.sizes) > 1 and min(means) > 0:
        slope = float(np.polyfit(np.log(args.sizes), np.log(means), 1)[0])
    _write_rows(args.csv, ("size", "trial", "distance", "iterations"), rows)
    summary = {
        "sizes": args.sizes,
        "mean_distance": means,
        "loglog_slope": slope,
        "pixel_scaling": "bytes / 255" if args.source == "cifar10" else None,
    }
    _write_report(args, started, {"summary": summary, "rows": rows})
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def _kernel(kind, channels, size, seed):
    if kind == "average":
        return np.full((channels, channels, size, size), 1.0 / (channels * size * size))
    return make_rng(seed, "specnorm-kernel").standard_normal((channels, channels, size, size))


def _true_norm(op, seed):
    if op.in_dim <= MATERIALIZE_MAX:
        W = materialize_conv(op)
        return spectral_norm_matrix(W, POWER_ITERS, PowerState.random(W.shape[1], seed))[0]
    return spectral_norm_conv(op, POWER_ITERS, PowerState.random(op.in_dim, seed))


def cmd_specnorm(args):
    started = time.perf_counter()
    rows, configs = [], []
    pad = (args.kernel - 1) // 2 if args.padding is None else args.padding
    for channels in args.channels:
        shape = (channels, args.input_size, args.input_size)
        op = ConvOperator(_kernel(args.kind, channels, args.kernel, args.seed), shape,
                          args.stride, pad)
        true = _true_norm(op, args.seed)
        cheap = reshaped_kernel_norm(op, POWER_ITERS, PowerState.random(channels * args.kernel**2))
        for depth in range(1, args.layers + 1):
            # same operator stacked; only shape-preserving layers can be chained
            if depth > 1 and op.output_shape != op.input_shape:
                break
            rows.append((channels, args.kernel, args.input_size, depth, true**depth,
                         cheap**depth, true**depth / cheap**depth))
            configs.append({"channels": channels, "depth": depth, "true_product": true**depth,
                            "reshaped_product": cheap**depth, "ratio": (true / cheap) ** depth})
    _write_rows(args.csv, ("channels", "kernel", "input_size", "layers", "true_norm",
                           "reshaped_norm", "ratio"), rows)
    _write_report(args, started, {"configurations": configs})
    return EXIT_OK


def cmd_critic_toy(args):
    started = time.perf_counter()
    X, Y = toy_problem()
    oracle = exact_uniform_wasserstein(pairwise_cost(X, Y, "l2"))[0]
    net = MlpCritic.random([2, *args.hidden, 1], args.seed, args.activation, init=args.init)
    mode = args.mode.replace("-", "_")
    estimate, history = fit_critic(net, X, Y, mode, AdamState(lr=args.lr), args.steps,
                                   lam=args.lam, seed=args.seed)
    if args.grid_csv:
        u = np.linspace(-1.0, 1.0, args.grid)
        pts = np.stack(np.meshgrid(u, u, indexing="ij"), axis=-1).reshape(-1, 2)
        _write_rows(args.grid_csv, ("x", "y", "value"),
                    [(p[0], p[1], v) for p, v in zip(pts, net(pts))])
    body = {"estimate": estimate, "oracle": oracle, "ratio": estimate / oracle,
            "history": history}
    _write_report(args, started, body)
    return EXIT_OK


def cmd_manifold(args):
    started = time.perf_counter()
    data = load_batch(args.data, args.format)
    cfg = TrainConfig(
        epochs=args.epochs, batch=args.batch, solver=canonical_solver(args.solver),
        solver_cfg=_config(args), outer_iter=args.outer, cost=args.cost, hidden=args.hidden,
        lr=args.lr, seed=args.seed, fixed_z=args.fixed_z,
    )
    gen, history = train_toy_generator(data, cfg)
    grid = manifold_grid(gen, args.grid)
    if grid.image_shape is not None and grid.image_shape[2] == 1:
        if args.pgm:
            write_pgm(args.pgm, tile_images(grid, args.grid))
    elif args.pgm:
        # non-image data: the grid is written as sample rows instead
        write_csv(args.pgm, grid)
    _write_rows(args.loss_csv, ("epoch", "loss"), list(enumerate(history)))
    body = {"loss_history": history, "initial_loss": history[0], "final_loss": history[-1]}
    _write_report(args, started, body)
    return EXIT_OK


def _solver_flags(p, solver="pdhg", eps=0.05, tol=1e-9, max_iter=10_000):
    p.add_argument("--cost", default="sql2", choices=[k.value for k in CostKind])
    p.add_argument("--solver", default=solver,
                   choices=["pdhg", "sinkhorn", "sinkhorn-center", "fista", "fista-center"])
    p.add_argument("--eps", type=float, default=eps)
    p.add_argument("--tol", type=float, default=tol)
    p.add_argument("--max-iter", type=int, default=max_iter)
    p.add_argument("--inner", type=int, default=1)
    p.add_argument("--outer", type=int, default=None)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--log-domain", action="store_true")
    p.add_argument("--format", default="auto", choices=["auto", "csv", "idx", "cifar10"])
    p.add_argument("--out", default=None, help="JSON report path (default: stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="wdist", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="transport distance between two sample files")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    _solver_flags(p)
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("bench-eps", help="distance and iterations over an epsilon grid")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--n", type=int, default=5, help="fixture size when no files are given")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-grid", type=_floats, default=[0.01, 0.1, 1.0])
    p.add_argument("--solvers", default="sinkhorn,sinkhorn-center,fista,fista-center")
    p.add_argument("--csv", default=None)
    _solver_flags(p, solver="sinkhorn")
    p.set_defaults(handler=cmd_bench_eps)

    p = sub.add_parser("bench-batch", help="distance between same-source batches by size")
    p.add_argument("--sizes", type=_ints, default=[50, 100, 200, 400])
    p.add_argument("--source", default="blobs", choices=["blobs", "cifar10"])
    p.add_argument("--data", default=None, help="CIFAR-10 binary batch for --source cifar10")
    p.add_argument("--centers", type=lambda t: np.array(_floats(t)).reshape(-1, 2).tolist(),
                   default=[[0.5, 0.5]], help="flat list of 2-D blob centers")
    p.add_argument("--scale", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None)
    _solver_flags(p, solver="sinkhorn", eps=0.005, tol=1e-6, max_iter=20_000)
    p.set_defaults(handler=cmd_bench_batch, cost="l2")

    p = sub.add_parser("specnorm", help="true versus reshaped-kernel convolution norms")
    p.add_argument("--channels", type=_ints, default=[1, 2, 3])
    p.add_argument("--kernel", type=int, default=3)
    p.add_argument("--input-size", type=int, default=8)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--padding", type=int, default=None, help="default keeps the spatial size")
    p.add_argument("--kind", default="average", choices=["average", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_specnorm)

    p = sub.add_parser("critic-toy", help="Lipschitz critic on the four-point toy")
    p.add_argument("--mode", default="sn-layer", choices=["gp", "sn-layer", "sn-project"])
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--hidden", type=_ints, default=[10, 10, 10, 10])
    p.add_argument("--activation", default="relu", choices=["relu", "leaky_relu"])
    p.add_argument("--init", default="uniform", choices=["uniform", "dcgan"])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--grid", type=int, default=41)
    p.add_argument("--grid-csv", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_critic_toy)

    p = sub.add_parser("manifold", help="train the toy generator and tile its latent grid")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--hidden", type=int, default=500)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--grid", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixed-z", action="store_true")
    p.add_argument("--pgm", default=None, help="manifold output (PGM for images, else CSV)")
    p.add_argument("--loss-csv", default=None)
    _solver_flags(p, solver="sinkhorn", eps=0.05, tol=1e-6, max_iter=2000)
    p.set_defaults(handler=cmd_manifold)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (WdistError, OSError) as exc:
        print(f"wdist {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
