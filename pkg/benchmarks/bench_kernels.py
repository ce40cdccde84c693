"""Compare the compiled jet kernels with the numpy fallback.

Times each kernel on its own, then whole training stages of both solvers,
once per backend.  Usage::

    python3 benchmarks/bench_kernels.py --repeat 20 --stages 20
"""

from __future__ import annotations

import argparse
import time
import timeit

import numpy as np

from deeppde import dgm, tdgf
from deeppde.autodiff import _fallback, available_backends, kernels, use_backend
from deeppde.models import black_scholes, heston
from deeppde.network import init_params
from deeppde.tdgf import PayoffSolution, TDGFConfig


def kernel_table(C: int, N: int, repeat: int):
    rng = np.random.default_rng(0)
    pi = np.array([0, 0, 1], dtype=np.intp)
    pj = np.array([0, 1, 1], dtype=np.intp)
    u, v, adj = (np.ascontiguousarray(rng.normal(size=(C, N))) for _ in range(3))
    f = [np.ascontiguousarray(rng.normal(size=N)) for _ in range(4)]
    mods = {"python": _fallback}
    if "compiled" in available_backends():
        from deeppde.autodiff import _jetkernels

        mods["compiled"] = _jetkernels
    calls = {
        "unary_forward": lambda m: m.unary_forward(u, f[0], f[1], f[2], 2, pi, pj),
        "unary_backward": lambda m: m.unary_backward(u, f[1], f[2], f[3], adj, 2, pi, pj),
        "mul_forward": lambda m: m.mul_forward(u, v, 2, pi, pj),
        "mul_backward": lambda m: m.mul_backward(u, v, adj, 2, pi, pj),
    }
    rows = []
    for name, call in calls.items():
        row = [name]
        for backend in ("python", "compiled"):
            if backend not in mods:
                row.append(float("nan"))
                continue
            t = min(timeit.repeat(lambda: call(mods[backend]), number=5, repeat=repeat)) / 5
            row.append(t * 1e6)
        rows.append(row)
    return rows


def stage_time(fn, stages: int) -> float:
    fn(1)  # warm-up
    start = time.perf_counter()
    fn(stages)
    return (time.perf_counter() - start) / stages * 1e3


def solver_table(stages: int):
    bs, hs = black_scholes(), heston()

    def tdgf_run(model):
        def run(n):
            p = init_params(model.dim, 50, 3, seed=0, anchor_time=1 / 16)
            tdgf.train_time_step(1, [PayoffSolution(model)], p, model, TDGFConfig(stages=n),
                                 np.random.default_rng(0))
        return run

    def dgm_run(model):
        return lambda n: dgm.solve(model, dgm.DGMConfig(stages=n))

    cases = {
        "tdgf/black_scholes": tdgf_run(bs),
        "tdgf/heston": tdgf_run(hs),
        "dgm/black_scholes": dgm_run(bs),
        "dgm/heston": dgm_run(hs),
    }
    rows = []
    before = kernels.BACKEND
    try:
        for name, fn in cases.items():
            row = [name]
            for backend in ("python", "compiled"):
                if backend not in available_backends():
                    row.append(float("nan"))
                    continue
                use_backend(backend)
                row.append(stage_time(fn, stages))
            rows.append(row)
    finally:
        use_backend(before)
    return rows


def show(title, unit, rows):
    print(f"\n{title}")
    print(f"{'case':<20} {'python':>12} {'compiled':>12} {'speedup':>8}")
    for name, py, comp in rows:
        print(f"{name:<20} {py:>10.1f}{unit} {comp:>10.1f}{unit} {py / comp:>7.2f}x")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--components", type=int, default=6, help="jet components (value, grads, hessian)")
    ap.add_argument("--width", type=int, default=400 * 50, help="elements per component")
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--stages", type=int, default=10, help="training stages timed per solver case")
    ap.add_argument("--skip-solvers", action="store_true")
    args = ap.parse_args(argv)
    print(f"backends available: {available_backends()}")
    show(f"kernels, {args.components} x {args.width} (microseconds per call)", "us",
         kernel_table(args.components, args.width, args.repeat))
    if not args.skip_solvers:
        show("training stages at desk size (milliseconds per stage)", "ms", solver_table(args.stages))


if __name__ == "__main__":
    main()
