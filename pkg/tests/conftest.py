import numpy as np
import pytest

from kansynth.edges import Affine, Named, Polynomial, Spline, SplineSpace, eval_edge
from kansynth.graph import KanNetwork, Layer, MlpNetwork, MlpUnit


def random_mlp(rng, n, N, sigma, scale=1.0):
    W = rng.normal(scale=scale, size=(N, n))
    b = rng.normal(scale=scale, size=N)
    c = rng.normal(size=N)
    return MlpNetwork.from_arrays(W, b, c, sigma)


def random_dyadic_mlp(rng, n, N, sigma, max_m=64, max_r=6):
    def dy():
        return float(rng.integers(-max_m, max_m + 1)) / 2.0 ** int(rng.integers(0, max_r + 1))

    return MlpNetwork(n, tuple(MlpUnit([dy() for _ in range(n)], dy(), dy()) for _ in range(N)), sigma)


def random_edge(rng, kinds=("affine", "poly", "tanh", "spline")):
    kind = kinds[rng.integers(len(kinds))]
    if kind == "affine":
        return Affine(rng.normal(), rng.normal())
    if kind == "poly":
        return Polynomial(tuple(rng.normal(scale=0.5, size=3)))
    if kind == "tanh":
        return Named("tanh", rng.normal())
    space = SplineSpace.uniform(3, -2.0, 2.0, 4)
    return Spline(space, tuple(rng.normal(size=space.dim)))


def random_network(rng, widths, kinds=("affine", "poly", "tanh", "spline"), density=0.7):
    layers = []
    for w_in, w_out in zip(widths, widths[1:]):
        edges = {
            (k, j): random_edge(rng, kinds)
            for k in range(w_out)
            for j in range(w_in)
            if rng.random() < density
        }
        layers.append(Layer(w_out, w_in, edges))
    return KanNetwork(widths[0], layers)


def reference_eval(net, x):
    """Naive scalar evaluator: every edge of every dense grid, one point at a time."""
    h = [float(v) for v in x]
    for layer in net.layers:
        h = [sum(eval_edge(layer.edge(k, j), h[j]) for j in range(layer.in_width)) for k in range(layer.width)]
    return np.array(h)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(report, "user_properties", []))
            if "criterion" in props and report.when == "call":
                label = props.pop("criterion")
                detail = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in props.items())
                lines.append((label, f"{'PASS' if outcome == 'passed' else 'FAIL'}  criterion {label}  ({detail})"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
