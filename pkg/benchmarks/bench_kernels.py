"""Compare the compiled kernels with the numpy fallback.

Runs each hot path under both backends on the same inputs, checks that the
outputs agree bit for bit and prints best-of-``repeat`` timings::

    python benchmarks/bench_kernels.py --repeat 5 --stops 25
"""

import argparse
import sys
import timeit

import numpy as np

from sarcov import kernels
from sarcov.clustering import AdpcParams, cluster_viewpoints
from sarcov.routing import SolverConfig, TourProblem, solve
from sarcov.scenario import generate_viewpoints, random_scenario, viewpoint_array


def _problem(n, seed):
    rng = np.random.default_rng(seed)
    stops = np.column_stack([rng.uniform(-1000, 1000, (n, 2)), np.full(n, 500.0)])
    return TourProblem(np.zeros(3), stops, None)


def cases(stops, seed):
    problem = _problem(stops, seed)
    config = SolverConfig(seed=seed)
    rng = np.random.default_rng(seed)
    orders = np.ascontiguousarray(np.stack([rng.permutation(stops) for _ in range(1000)]))
    points = viewpoint_array(generate_viewpoints(random_scenario(20, 2000, 500, 60, 6, seed=seed)))
    return {
        "tour_lengths x1000": lambda: kernels.active().tour_lengths(problem.dist, orders),
        "pso 100x30": lambda: solve(problem, "pso", config),
        "ga 100x30": lambda: solve(problem, "ga", config),
        "aco 100x30": lambda: solve(problem, "aco", config),
        "adpc 120 viewpoints": lambda: cluster_viewpoints("adpc", points, 5, AdpcParams()),
        "dpc 120 viewpoints": lambda: cluster_viewpoints("dpc", points, 5),
    }


def _same(a, b):
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    if hasattr(a, "same_as"):
        return a.same_as(b)
    return a == b


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--stops", type=int, default=20, help="stops per routing instance")
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions (best is reported)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if "compiled" not in kernels.available():
        print("compiled extension not built; only the python backend is available")
        return 1
    print(f"{'kernel':<22}{'python ms':>12}{'compiled ms':>14}{'speedup':>10}  agree")
    for name, fn in cases(args.stops, args.seed).items():
        timings, outputs = {}, {}
        for backend in ("python", "compiled"):
            with kernels.use(backend):
                outputs[backend] = fn()
                timings[backend] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        py, c = timings["python"], timings["compiled"]
        agree = _same(outputs["python"], outputs["compiled"])
        print(f"{name:<22}{py * 1e3:>12.3f}{c * 1e3:>14.3f}{py / c:>9.1f}x  {'yes' if agree else 'NO'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
