"""Benchmark: compiled kernels vs the pure-NumPy fallback.

Times the two hot fitting kernels on workloads shaped like one Monte Carlo
coverage trial (m - 1 = 19 per-dataset fits over shared inputs), plus a full
end-to-end coverage slice through each backend.

Run:  python benchmarks/bench_backends.py [--trials 50]
"""

import argparse
import time

import numpy as np

from rankregions import backend as backend_mod
from rankregions.backend import available_backends
from rankregions.core import RngStream, logistic_model
from rankregions.experiments import ScenarioConfig, gen_gaussian_mixture, make_engine
from rankregions.resample import init_stem, test_candidate


def _bench(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(impl, n=100, m=19, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 1))
    labels = np.where(rng.random((n, m)) < 0.5, -1.0, 1.0)
    labels01 = (labels + 1) / 2
    t_perc = _bench(lambda: impl.perceptron_fit_many(X, labels))
    t_logi = _bench(lambda: impl.logistic_fit_many(X, labels01))
    return t_perc, t_logi


def bench_coverage(impl, trials, n=50, m=10, seed=0):
    backend_mod._impl = impl
    theta = logistic_model(0.0, 2.0)
    config = ScenarioConfig("gaussian-mixture", n, master_seed=seed)

    def run(kind):
        hits = 0
        for t in range(trials):
            stream = RngStream(config.master_seed, t)
            sample = gen_gaussian_mixture(n, stream)
            stem = init_stem(n, m, stream=stream, q1=1, q2=m - 1)
            engine = make_engine(kind, n)
            hits += test_candidate(theta, sample, stem, engine).accepted
        return hits

    out = {}
    for kind in ("perceptron", "mle"):
        t0 = time.perf_counter()
        hits = run(kind)
        out[kind] = (time.perf_counter() - t0, hits)
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=50,
                        help="coverage trials per engine for the end-to-end slice")
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; benchmarking the fallback only")

    print(f"{'kernel':<28}" + "".join(f"{name:>14}" for name in backends))
    rows = {}
    for name, impl in backends.items():
        rows[name] = bench_kernels(impl)
    for i, label in enumerate(("perceptron_fit_many (19)", "logistic_fit_many (19)")):
        line = f"{label:<28}"
        for name in backends:
            line += f"{rows[name][i] * 1e3:>12.2f}ms"
        print(line)

    print(f"\nend-to-end coverage slice ({args.trials} trials, n=50, m=10):")
    results = {name: bench_coverage(impl, args.trials) for name, impl in backends.items()}
    for kind in ("perceptron", "mle"):
        line = f"{kind + ' engine':<28}"
        for name in backends:
            line += f"{results[name][kind][0] * 1e3:>12.1f}ms"
        print(line)
    hit_sets = {
        kind: {results[name][kind][1] for name in backends} for kind in ("perceptron", "mle")
    }
    for kind, hits in hit_sets.items():
        status = "identical" if len(hits) == 1 else f"DIFFER: {hits}"
        print(f"{kind} hit counts across backends: {status}")


if __name__ == "__main__":
    main()
