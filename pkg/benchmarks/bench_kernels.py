"""Compare the compiled and numpy kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Prints best-of-N wall time per case and checks both backends return the
same assignment and energy.
"""

import argparse
import sys
import timeit

import numpy as np

from qubo_svm.datasets import load_dataset
from qubo_svm.encoding import build_qubo, make_encoding
from qubo_svm.kernels import get_backend
from qubo_svm.qubo import QuboInstance


def random_qubo(n, seed):
    rng = np.random.default_rng(seed)
    return QuboInstance.from_upper(np.triu(rng.uniform(-1, 1, (n, n))))


def cases():
    iris = load_dataset("iris")
    yield "tabu n=14 20x1000", "tabu", random_qubo(14, 0), dict(restarts=20, iterations=1000)
    yield "tabu n=100 (iris k=1) 4x5000", "tabu", build_qubo(iris, make_encoding(1, 1.0), 1.0).qubo, dict(
        restarts=4, iterations=5000)
    yield "tabu n=300 (iris k=3) 2x5000", "tabu", build_qubo(iris, make_encoding(3, 1.0), 1.0).qubo, dict(
        restarts=2, iterations=5000)
    yield "brute force n=16", "brute", random_qubo(16, 1), {}
    yield "brute force n=20", "brute", random_qubo(20, 2), {}


def call(backend, kind, q, params):
    if kind == "brute":
        return backend.brute_force(q.pair_matrix, q.diag)
    starts = np.random.default_rng(0).integers(0, 2, (params["restarts"], q.n)).astype(np.uint8)
    starts[0] = 0
    tenure = max(10, q.n // 10)
    return backend.tabu_search(q.pair_matrix, q.diag, starts, params["iterations"], tenure)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    try:
        cy = get_backend("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    py = get_backend("python")

    print(f"{'case':32s} {'cython':>10s} {'python':>10s} {'speedup':>8s}  same")
    for label, kind, q, params in cases():
        times = {}
        results = {}
        for name, mod in (("cython", cy), ("python", py)):
            results[name] = call(mod, kind, q, params)
            times[name] = min(timeit.repeat(lambda: call(mod, kind, q, params), number=1, repeat=args.repeat))
        # Gray-code and chunked enumeration accumulate energies differently
        a, b = results["cython"], results["python"]
        same = np.array_equal(a[0], b[0]) and np.isclose(a[1], b[1], rtol=1e-9, atol=1e-12)
        print(f"{label:32s} {times['cython']:9.4f}s {times['python']:9.4f}s {times['python'] / times['cython']:7.1f}x  {same}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
