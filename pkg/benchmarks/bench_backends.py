"""Compare the compiled layer kernel with the NumPy fallback.

    python benchmarks/bench_backends.py [--points 10000] [--repeat 3]

Each case evaluates one network on a batch of points with both backends and
prints the best wall time and the largest output difference.  Arithmetic
edges agree bitwise; tanh and silu go through NumPy's vectorized routines in
the fallback and libm in the kernel, which may differ in the last bit.
"""

import argparse
import time

import numpy as np

from kansynth import synthesis
from kansynth._backend import available_backends, get_backend
from kansynth.approximation import TargetSpec, fit_shallow_mlp, mlp_to_kan_spline, round_dyadic
from kansynth.edges import Named, Polynomial
from kansynth.graph import eval_kan


def cases():
    target = TargetSpec(2, 0.0, 1.0, "sin_cos")
    mlp = fit_shallow_mlp(target, Named("tanh"), 200, seed=42)
    yield "two_hidden tanh N=200", synthesis.mlp_to_kan_two_hidden(mlp)
    yield "spline_edges N=200", mlp_to_kan_spline(mlp, target.grid())
    yield "polynomial deg 4", synthesis.polynomial_gadget(
        [((2, 2), 1.0), ((1, 0), -3.0), ((0, 3), 0.5)], Polynomial((0.0, 1.0, 0.0, 1.0))
    ).network
    small = fit_shallow_mlp(target, Named("silu"), 20, seed=1)
    yield "dyadic_A0 N=20 r=12", synthesis.dyadic_mlp_gadget(round_dyadic(small, 12), strategy="auto").network


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=10000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    names = available_backends()
    if "cython" not in names:
        print("compiled kernel not built; only the fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'case':<26} {'edges':>7} " + " ".join(f"{n + ' [s]':>12}" for n in names) + "   speedup  max |diff|")
    for label, net in cases():
        X = rng.uniform(0.0, 1.0, size=(args.points, net.input_width))
        times, outs = [], []
        for name in names:
            kern = get_backend(name)
            t, out = best_time(lambda: eval_kan(net, X, kernels=kern), args.repeat)
            times.append(t)
            outs.append(out)
        diff = max((float(np.max(np.abs(outs[0] - o))) for o in outs[1:]), default=0.0)
        speed = f"{times[0] / times[-1]:8.1f}x" if len(times) > 1 else "       -"
        print(f"{label:<26} {net.num_edges:>7} " + " ".join(f"{t:12.4f}" for t in times) + f"  {speed}  {diff:10.2e}")


if __name__ == "__main__":
    main()
