"""Time the compiled search kernel against the pure-Python one.

Both run the same node sequence, so node counts must agree; only the
wall time differs.

    python benchmarks/bench_kernel.py --seeds 5 --k 2
"""
import argparse
import statistics
import time

from vfogmatch import kernel
from vfogmatch.scenario import ScenarioConfig, build_instance
from vfogmatch import solvers
from vfogmatch.solvers import solve_exact


def run(backend, instances, repeat):
    times, results = [], []
    for inst in instances:
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            sol = solve_exact(inst, backend=backend)
            best = min(best, time.perf_counter() - t0)
        times.append(best)
        results.append((sol.objective, sol.nodes_explored, sol.optimal))
    return times, results


def raw_throughput(backend, inst, nodes):
    """Nodes per second of the bare depth-first search, without the
    multiplier pre-pass, stopped after a fixed node count."""
    enc = solvers.encode(inst)
    n, nv = enc.n, enc.nv
    arrays = solvers._kernel_arrays(enc, list(range(n)), list(range(nv)))
    caps3 = (enc.fog_rate_cap, enc.cloud_rate_cap, enc.cloud_mhz_cap)
    inc = [nv] * n
    inc_cost = float(arrays["cloud_cost"].sum())
    t0 = time.perf_counter()
    _, _, explored, _ = solvers._run_kernel(
        kernel.get(backend), arrays, caps3, inc, inc_cost, None, nodes, float("inf"))
    return explored, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--k", type=int, default=2, help="packages per vehicle (2 gives real search trees)")
    ap.add_argument("--requests", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=1)
    ap.add_argument("--raw-nodes", type=int, default=200_000,
                    help="node cap for the bare-kernel throughput run")
    args = ap.parse_args()

    if "cython" not in kernel.BACKENDS:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
    instances = [
        build_instance(ScenarioConfig(seed=s, packages_per_vehicle=args.k, request_count=args.requests))
        for s in range(args.seeds)
    ]
    report = {}
    for backend in ("cython", "python"):
        report[backend] = run(backend, instances, args.repeat)

    print(f"{'seed':>4} {'nodes':>9} {'cython s':>9} {'python s':>9} {'speedup':>8}")
    for s in range(args.seeds):
        tc, rc = report["cython"][0][s], report["cython"][1][s]
        tp, rp = report["python"][0][s], report["python"][1][s]
        if rc != rp:
            raise SystemExit(f"seed {s}: backends disagree {rc} vs {rp}")
        print(f"{s:>4} {rc[1]:>9} {tc:>9.3f} {tp:>9.3f} {tp / tc:>7.1f}x")
    tc, tp = sum(report["cython"][0]), sum(report["python"][0])
    ratios = [p / c for c, p in zip(report["cython"][0], report["python"][0])]
    print(f"total  cython {tc:.2f}s  python {tp:.2f}s  median speedup {statistics.median(ratios):.1f}x")

    print("\nbare kernel, seed 0, all-cloud incumbent, no multipliers:")
    rates = {}
    for backend in ("cython", "python"):
        explored, secs = raw_throughput(backend, instances[0], args.raw_nodes)
        rates[backend] = explored / secs
        print(f"  {backend:<7} {explored:>8} nodes in {secs:7.3f}s  ({rates[backend]:,.0f} nodes/s)")
    print(f"  speedup {rates['cython'] / rates['python']:.1f}x")


if __name__ == "__main__":
    main()
