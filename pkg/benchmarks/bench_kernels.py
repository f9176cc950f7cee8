"""Compare the compiled and pure-Python kernels on F1Tenth chains.

    python benchmarks/bench_kernels.py [--default-grid] [--runs N]

Both backends receive identical inputs; the script checks that their outputs
agree before reporting timings.
"""

import argparse
import time

import numpy as np

from scenver import kernels
from scenver.cases.build import build_case_chains, f1tenth_abstractions
from scenver.cases.f1tenth import F1TenthConfig, F1TenthModel
from scenver.kernels import _pykernels

try:
    from scenver.kernels import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--default-grid", action="store_true", help="use the full-size grid")
    ap.add_argument("--runs", type=int, default=20000, help="trajectories per simulation")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels are not built; nothing to compare")
        return

    cfg = F1TenthConfig() if args.default_grid else F1TenthConfig.reduced()
    model = F1TenthModel(cfg)
    chain = build_case_chains("f1tenth", f1tenth_abstractions(model, "neighbor:0.1"), model=model)["straight"]
    indptr, indices, data = kernels.csr_arrays(chain.transitions)
    cdf = kernels.row_cdf(indptr, data)
    starts = np.array(model.nominal_starts(), dtype=np.int64)
    h = cfg.horizon
    print(f"grid {cfg.side_range}x{cfg.front_range}, horizon {h}, {chain.space.size} states, {len(data)} transitions")

    rng = np.random.Generator(np.random.PCG64(0))
    init = starts[rng.integers(len(starts), size=args.runs)]
    u = rng.random((args.runs, h))
    rows = []
    results = {}
    for name, impl in (("cython", _ckernels), ("python", _pykernels)):
        def sim():
            s = init.copy()
            kernels.simulate_block(indptr, indices, cdf, s, u, chain.error_index, impl=impl)
            return s

        def prop():
            return np.array([kernels.propagate_unit(indptr, indices, data, i, h, impl=impl) for i in range(200)])

        t_sim, s = best_of(sim, args.repeat)
        t_prop, p = best_of(prop, args.repeat)
        results[name] = (s, p)
        rows.append((name, t_sim, t_prop))

    same_sim = np.array_equal(results["cython"][0], results["python"][0])
    same_prop = np.allclose(results["cython"][1], results["python"][1], atol=1e-12)
    print(f"{'backend':>8}  {'simulate [s]':>12}  {'propagate [s]':>13}")
    for name, a, b in rows:
        print(f"{name:>8}  {a:12.4f}  {b:13.4f}")
    print(f"speedup   {rows[1][1] / rows[0][1]:11.1f}x  {rows[1][2] / rows[0][2]:12.1f}x")
    print(f"outputs agree: simulate {same_sim}, propagate {same_prop}")


if __name__ == "__main__":
    main()
