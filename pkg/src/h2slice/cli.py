"""Command-line interface: eig, compare, inertia, and selftest subcommands.

Exit codes: 0 success, 2 bad usage or configuration, 3 computational
failure (unbracketed index, unresolved indices, failed selftest).
"""

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import __version__
from ._core import BACKEND
from .compress import construct, load_matrix_file, reconstruct_dense, shift_diagonal
from .dense import inertia_of, ldl_symmetric, rrqr_truncated
from .errors import ConfigError, H2SliceError
from .geometry import (
    DenseKernel,
    PointCloud,
    generate_circle,
    generate_grid,
    laplace_kernel,
    sfc_order,
)
from .gldl import generalized_ldl, inertia
from .parallel import efficiency_report, master_worker_solve, static_partition_solve
from .partition import WEAK, build_tree, classify, flat_structure, strong
from .spectrum import (
    EPS_EV_DEFAULT,
    default_interval,
    slice_range,
    slice_spectrum,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE = 3


def _add_problem_args(p):
    p.add_argument("--geom", choices=["circle", "grid"], default="circle",
                   help="point geometry (default circle)")
    p.add_argument("--n", type=int, default=256,
                   help="point count for circle or 1D grid (default 256)")
    p.add_argument("--dim", type=int, choices=[1, 2, 3], default=1,
                   help="grid dimension (default 1)")
    p.add_argument("--n-per-axis", type=int, default=None,
                   help="grid points per axis (overrides --n for dim > 1)")
    p.add_argument("--matrix-file", default=None,
                   help="explicit symmetric matrix file instead of a kernel")
    p.add_argument("--format", choices=["blr2", "hss", "h2"], default="hss",
                   help="compression format (default hss)")
    p.add_argument("--eps-ev", type=float, default=EPS_EV_DEFAULT,
                   help=f"eigenvalue tolerance (default {EPS_EV_DEFAULT})")
    p.add_argument("--eps-h2", type=float, default=None,
                   help="compression tolerance (default 0.01 * eps-ev)")
    p.add_argument("--leaf-size", type=int, default=32,
                   help="cluster tree leaf size (default 32)")
    p.add_argument("--eta", type=float, default=1.0,
                   help="strong admissibility parameter (default 1.0)")


def _build_problem(args):
    eps_h2 = args.eps_h2 if args.eps_h2 is not None else 1e-2 * args.eps_ev
    if args.matrix_file:
        A = load_matrix_file(args.matrix_file)
        n = A.shape[0]
        cloud = PointCloud(np.arange(n, dtype=float).reshape(-1, 1))
        order = sfc_order(cloud)
        cloud = cloud.permuted(order)
        kernel = DenseKernel(A[np.ix_(order, order)])
        source = f"matrix-file {args.matrix_file} (n={n})"
    else:
        if args.geom == "circle":
            cloud = generate_circle(args.n)
            source = f"circle n={args.n}"
        else:
            if args.dim == 1:
                npa = args.n_per_axis if args.n_per_axis is not None else args.n
            else:
                if args.n_per_axis is None:
                    raise ConfigError("--n-per-axis is required for grid dim > 1")
                npa = args.n_per_axis
            cloud = generate_grid(npa, args.dim)
            source = f"grid dim={args.dim} n-per-axis={npa} (n={cloud.n})"
        order = sfc_order(cloud)
        cloud = cloud.permuted(order)
        kernel = laplace_kernel(cloud)
    tree = build_tree(cloud, args.leaf_size)
    if args.format == "blr2":
        st = flat_structure(tree)
    elif args.format == "hss":
        st = classify(tree, WEAK)
    else:
        st = classify(tree, strong(args.eta))
    H = construct(kernel, tree, st, eps_h2)
    meta = {
        "source": source,
        "format": H.fmt,
        "n": H.n,
        "eps_ev": args.eps_ev,
        "eps_h2": eps_h2,
        "leaf_size": args.leaf_size,
        "max_rank": H.max_rank(),
        "storage_mb": round(H.storage_bytes() / 2**20, 3),
        "backend": BACKEND,
    }
    return H, meta


def _write_estimates(path, fmt, meta, estimates, task_records=()):
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "value", "half_width", "iterations", "inertia_evals", "wall_time"])
            for e in estimates:
                w.writerow([e.k, repr(e.value), repr(e.half_width), e.iterations,
                            e.inertia_evals, repr(e.wall_time)])
    else:
        with open(path, "w") as fh:
            fh.write(json.dumps({"type": "meta", **meta}, sort_keys=True) + "\n")
            for e in estimates:
                fh.write(json.dumps({"type": "estimate", **json.loads(e.to_json())},
                                    sort_keys=True) + "\n")
            for r in task_records:
                fh.write(json.dumps({"type": "task", **json.loads(r.to_json())},
                                    sort_keys=True) + "\n")


def _cmd_eig(args):
    H, meta = _build_problem(args)
    if args.k is None and args.k_range is None and not args.all:
        raise ConfigError("one of --k, --k-range, --all is required")
    interval = tuple(args.interval) if args.interval else default_interval(H)
    meta["interval"] = list(interval)
    task_records = ()
    t0 = time.perf_counter()
    if args.k is not None:
        estimates = [slice_spectrum(H, args.k, interval, args.eps_ev)]
    else:
        k_lo, k_hi = (1, H.n) if args.all else args.k_range
        if args.workers > 1:
            if args.schedule == "master":
                result = master_worker_solve(H, k_lo, k_hi, interval, args.eps_ev,
                                             workers=args.workers, m=args.batch)
            else:
                result = static_partition_solve(H, k_lo, k_hi, interval, args.eps_ev,
                                                workers=args.workers)
            estimates = result.estimates
            task_records = result.records()
            print(efficiency_report(result))
        else:
            estimates = slice_range(H, k_lo, k_hi, interval, args.eps_ev)
    wall = time.perf_counter() - t0
    meta["wall_time"] = round(wall, 3)

    print(f"{meta['source']}  format={meta['format']}  n={meta['n']}  "
          f"max_rank={meta['max_rank']}  backend={BACKEND}")
    print(f"interval=({interval[0]:.6g}, {interval[1]:.6g})  eps_ev={args.eps_ev:g}  "
          f"eigenvalues={len(estimates)}  wall={wall:.2f}s")
    show = estimates if len(estimates) <= 12 else estimates[:6] + estimates[-6:]
    for e in show:
        print(f"  k={e.k:>5d}  value={e.value: .12e}  +/-{e.half_width:.2e}  "
              f"evals={e.inertia_evals}")
    if len(estimates) > 12:
        print(f"  ... ({len(estimates) - 12} more)")
    if args.output:
        _write_estimates(args.output, args.output_format, meta, estimates, task_records)
        print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_inertia(args):
    H, meta = _build_problem(args)
    print(f"{meta['source']}  format={meta['format']}  n={meta['n']}")
    rows = []
    for mu in args.mu:
        c = inertia(H, mu)
        rows.append({"mu": mu, "neg": c.neg, "zero": c.zero, "pos": c.pos})
        print(f"  mu={mu: .10g}:  {c.neg} below, {c.zero} at, {c.pos} above")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(json.dumps({"type": "meta", **meta}, sort_keys=True) + "\n")
            for row in rows:
                fh.write(json.dumps({"type": "inertia", **row}, sort_keys=True) + "\n")
        print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_compare(args):
    fmts = args.formats or ["blr2", "hss", "h2"]
    rows = []
    k_probe = None
    interval = None
    for fmt in fmts:
        sub = argparse.Namespace(**vars(args))
        sub.format = fmt
        t0 = time.perf_counter()
        H, meta = _build_problem(sub)
        t_build = time.perf_counter() - t0
        if interval is None:
            interval = tuple(args.interval) if args.interval else default_interval(H)
            k_probe = max(1, H.n // 2)
        t0 = time.perf_counter()
        reps = 3
        for r in range(reps):
            generalized_ldl(shift_diagonal(H, interval[0] + (0.25 + 0.2 * r)
                                           * (interval[1] - interval[0])))
        t_factor = (time.perf_counter() - t0) / reps
        est = slice_spectrum(H, k_probe, interval, args.eps_ev)
        rows.append({
            "format": fmt,
            "max_rank": meta["max_rank"],
            "storage_mb": meta["storage_mb"],
            "construct_s": round(t_build, 3),
            "factor_ms": round(t_factor * 1000.0, 2),
            f"lambda_{k_probe}": est.value,
        })
    print(f"n={meta['n']}  probe k={k_probe}  eps_ev={args.eps_ev:g}")
    hdr = ["format", "max_rank", "storage_mb", "construct_s", "factor_ms", f"lambda_{k_probe}"]
    print("  ".join(f"{h:>12s}" for h in hdr))
    for row in rows:
        print("  ".join(f"{row[h]:>12}" if not isinstance(row[h], float)
                        else f"{row[h]:>12.6g}" for h in hdr))
    vals = [row[f"lambda_{k_probe}"] for row in rows]
    spread = max(vals) - min(vals)
    print(f"value spread across formats: {spread:.3e} (eps_ev={args.eps_ev:g})")
    if args.output:
        with open(args.output, "w") as fh:
            for row in rows:
                fh.write(json.dumps({"type": "compare", **row}, sort_keys=True) + "\n")
        print(f"wrote {args.output}")
    return EXIT_OK


# --------------------------------------------------------------- selftest
def _check_dense_ldl(rng, fault):
    n = 40
    A = rng.standard_normal((n, n))
    A = (A + A.T) / 2
    res = ldl_symmetric(A)
    err = np.max(np.abs(A[np.ix_(res.perm, res.perm)] - res.L @ res.D @ res.L.T))
    w = np.linalg.eigvalsh(A)
    got = inertia_of(res)
    want = (int(np.sum(w < 0)), 0, int(np.sum(w > 0)))
    if fault:
        want = (want[2], want[1], want[0])
    ok = err < 1e-10 and got == want
    return ok, f"recon_err={err:.1e} inertia={got} expected={want}"

def _check_rrqr(rng, fault):
    M = rng.standard_normal((30, 12)) @ rng.standard_normal((12, 50))
    M += 1e-9 * rng.standard_normal(M.shape)
    bs = rrqr_truncated(M, 1e-6)
    Q = bs.square()
    orth = np.max(np.abs(Q.T @ Q - np.eye(30)))
    tail = np.linalg.norm(bs.U_R.T @ M, 2)
    ok = orth < 1e-12 and bs.rank <= 14 and tail <= 1e-5 * np.linalg.norm(M, 2)
    return ok, f"rank={bs.rank} orth={orth:.1e} tail={tail:.1e}"

def _make_problem(n, fmt, eps):
    cloud = generate_circle(n)
    cloud = cloud.permuted(sfc_order(cloud))
    tree = build_tree(cloud, 16)
    st = {"blr2": flat_structure(tree), "hss": classify(tree, WEAK),
          "h2": classify(tree, strong(1.0))}[fmt]
    return construct(laplace_kernel(cloud), tree, st, eps)

def _check_compress(rng, fault):
    H = _make_problem(96, "hss", 1e-8)
    cloud = generate_circle(96)
    cloud = cloud.permuted(sfc_order(cloud))
    A = laplace_kernel(cloud).block(np.arange(96), np.arange(96))
    err = np.linalg.norm(reconstruct_dense(H) - A, 2) / np.linalg.norm(A, 2)
    ok = err < 1e-6
    return ok, f"rel_err={err:.1e}"

def _check_inertia(rng, fault):
    bad = 0
    detail = []
    for fmt in ("hss", "h2"):
        H = _make_problem(128, fmt, 1e-8)
        w = np.linalg.eigvalsh(reconstruct_dense(H))
        for q in (0.2, 0.5, 0.8):
            mu = float(np.quantile(w, q) + 0.37)
            c = inertia(H, mu)
            want = int(np.sum(w < mu))
            if (c.neg, c.zero) != (want, 0):
                bad += 1
                detail.append(f"{fmt}@{mu:.3g}: {c.neg} vs {want}")
    return bad == 0, "; ".join(detail) or "6 shifts exact"

def _check_slicing(rng, fault):
    H = _make_problem(128, "hss", 1e-9)
    w = np.linalg.eigvalsh(reconstruct_dense(H))
    eps_ev = 1e-6
    iv = (float(w[0] - 1.0), float(w[-1] + 1.0))
    worst = 0.0
    for k in (1, 41, 99, 128):
        est = slice_spectrum(H, k, iv, eps_ev)
        worst = max(worst, abs(est.value - w[k - 1]))
    ok = worst <= eps_ev / 2 + 5e-8
    return ok, f"worst_err={worst:.2e} bound={eps_ev / 2:.1e}"

def _check_parallel(rng, fault):
    H = _make_problem(128, "hss", 1e-8)
    iv = default_interval(H)
    r1 = static_partition_solve(H, 30, 50, iv, 1e-5, workers=1)
    r2 = static_partition_solve(H, 30, 50, iv, 1e-5, workers=2)
    d = max(abs(a.value - b.value) for a, b in zip(r1.estimates, r2.estimates))
    mw = master_worker_solve(H, 30, 50, iv, 1e-5, workers=2, m=3)
    dm = max(abs(a.value - b.value) for a, b in zip(r1.estimates, mw.estimates))
    ok = d == 0.0 and dm <= 2e-5
    return ok, f"static_diff={d:.1e} mw_diff={dm:.1e}"

def _check_strong_fill(rng, fault):
    cloud = generate_grid(256, 1)
    cloud = cloud.permuted(sfc_order(cloud))
    tree = build_tree(cloud, 16)
    H = construct(laplace_kernel(cloud), tree, classify(tree, strong(1.0)), 1e-8)
    A = reconstruct_dense(H)
    w = np.linalg.eigvalsh(A)
    mu = float(np.quantile(w, 0.65) + 0.11)
    f = generalized_ldl(shift_diagonal(H, mu), keep_factors=True)
    resid = np.linalg.norm(f.reconstruct() - (A - mu * np.eye(256)), 2)
    want = int(np.sum(w < mu))
    ok = f.inertia_counts.neg == want and resid <= 50 * 1e-8 * np.linalg.norm(A, 2)
    return ok, (f"fills={f.stats['fill_blocks']} resid={resid:.1e} "
                f"neg={f.inertia_counts.neg} want={want}")

def _check_matrix_io(rng, fault):
    import os
    import tempfile
    from .compress import save_matrix_file
    A = rng.standard_normal((33, 33))
    A = (A + A.T) / 2
    fd, path = tempfile.mkstemp(suffix=".mat")
    os.close(fd)
    try:
        save_matrix_file(path, A)
        B = load_matrix_file(path)
    finally:
        os.unlink(path)
    ok = np.array_equal(A, B)
    return ok, f"roundtrip max diff={np.max(np.abs(A - B)):.1e}"


def _cmd_selftest(args):
    checks = [
        ("dense-ldl-inertia", _check_dense_ldl),
        ("rrqr-split", _check_rrqr),
        ("compress-reconstruct", _check_compress),
        ("factor-inertia", _check_inertia),
        ("spectrum-slicing", _check_slicing),
    ]
    if args.suite == "full":
        checks += [
            ("parallel-agreement", _check_parallel),
            ("strong-fill-path", _check_strong_fill),
            ("matrix-file-roundtrip", _check_matrix_io),
        ]
    rng = np.random.default_rng(args.seed)
    failures = 0
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng, args.inject_fault)
        except Exception as exc:  # noqa: BLE001 - selftest reports, not crashes
            ok, detail = False, f"exception: {exc!r}"
        ms = (time.perf_counter() - t0) * 1000.0
        print(f"{'ok  ' if ok else 'FAIL'} {name:<24s} {ms:8.1f} ms  {detail}")
        failures += 0 if ok else 1
    total = len(checks)
    print(f"{total - failures}/{total} checks passed (suite={args.suite}, backend={BACKEND})")
    return EXIT_OK if failures == 0 else EXIT_FAILURE


def build_parser():
    p = argparse.ArgumentParser(
        prog="h2slice",
        description="rank-structured symmetric eigenvalue solver (spectrum slicing)",
    )
    p.add_argument("--version", action="version", version=f"h2slice {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eig", help="locate eigenvalues by inertia bisection")
    _add_problem_args(pe)
    pe.add_argument("--k", type=int, default=None, help="single 1-based eigenvalue index")
    pe.add_argument("--k-range", type=int, nargs=2, metavar=("LO", "HI"), default=None)
    pe.add_argument("--all", action="store_true", help="all indices 1..n")
    pe.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"), default=None,
                    help="search interval (default: Gershgorin bounds)")
    pe.add_argument("--workers", type=int, default=1)
    pe.add_argument("--schedule", choices=["static", "master"], default="static")
    pe.add_argument("-m", "--batch", type=int, default=4,
                    help="master-worker batch size (default 4)")
    pe.add_argument("--output", default=None, help="write results to this file")
    pe.add_argument("--output-format", choices=["jsonl", "csv"], default="jsonl")
    pe.set_defaults(fn=_cmd_eig)

    pi = sub.add_parser("inertia", help="eigenvalue counts below given shifts")
    _add_problem_args(pi)
    pi.add_argument("--mu", type=float, nargs="+", required=True)
    pi.add_argument("--output", default=None)
    pi.set_defaults(fn=_cmd_inertia)

    pc = sub.add_parser("compare", help="compare compression formats on one problem")
    _add_problem_args(pc)
    pc.add_argument("--formats", nargs="+", choices=["blr2", "hss", "h2"], default=None)
    pc.add_argument("--interval", type=float, nargs=2, default=None)
    pc.add_argument("--output", default=None)
    pc.set_defaults(fn=_cmd_compare)

    ps = sub.add_parser("selftest", help="run built-in correctness checks")
    ps.add_argument("--suite", choices=["quick", "full"], default="quick")
    ps.add_argument("--seed", type=int, default=2024)
    ps.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    ps.set_defaults(fn=_cmd_selftest)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except H2SliceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
