"""Regenerate tests/golden/*.json.

Each document stores the network together with probe points and the
outputs it produced when written.  Only rerun this after a deliberate
format_version bump; the test suite checks that decoding a golden file
reproduces the recorded outputs.
"""

import os
import sys

import numpy as np

from kansynth import synthesis
from kansynth.approximation import TargetSpec, approximate_pipeline
from kansynth.edges import Named, Polynomial
from kansynth.graph import MlpNetwork, MlpUnit, collect_affine_dictionary, identity_network
from kansynth.serialize import save_network

HERE = os.path.dirname(os.path.abspath(__file__))
GOLDEN = os.path.join(HERE, os.pardir, "tests", "golden")

MLP = MlpNetwork(
    2,
    (MlpUnit((1.25, -0.5), 0.75, 2.0), MlpUnit((-1.5, 0.25), -0.5, -0.75), MlpUnit((0.5, 1.0), 0.0, 1.5)),
    Named("tanh"),
)
SIGMA3 = Polynomial((0.0, 1.0, 0.0, 1.0))  # t + t^3
POLY = [((2, 1), 1), ((1, 0), -3), ((0, 0), "1/2")]


def builders():
    yield "identity", identity_network(1), {}
    rep = synthesis.dyadic_affine_gadget("3/2", "-1/4")
    yield "dyadic_affine", rep.network, {"q": "3/2", "b": "-1/4", "family": "A0"}
    rep = synthesis.dyadic_affine_gadget("-769.8125", "5/8", strategy="binary")
    yield "dyadic_affine_binary", rep.network, {"q": "-769.8125", "b": "5/8", "family": "A0"}
    dy_mlp = MlpNetwork(2, (MlpUnit((0.5, -1.0), 0.25, 1.5), MlpUnit((-0.75, 2.0), 0.0, -0.5)), Named("silu"))
    yield "dyadic_mlp", synthesis.dyadic_mlp_gadget(dy_mlp).network, {"family": "A0"}
    yield "mlp_shallow", synthesis.mlp_to_kan_shallow(MLP), {}
    yield "mlp_two_hidden", synthesis.mlp_to_kan_two_hidden(MLP), {}
    yield "fd_quadratic", synthesis.fd_quadratic_gadget(SIGMA3, 1.0).network, {"sigma": list(SIGMA3.coeffs)}
    sq = synthesis.square_gadget(Polynomial((4.0, -1.0, 0.0, 0.0, 0.0, 2.0)), 0.5)
    yield "square", sq.network, {}
    yield "multiply", synthesis.multiply_gadget(synthesis.square_gadget(SIGMA3)), {}
    yield "polynomial", synthesis.polynomial_gadget(POLY, SIGMA3).network, {}
    yield "polynomial_dyadic", synthesis.polynomial_gadget(POLY, SIGMA3, dyadic=True).network, {}
    rep = approximate_pipeline(TargetSpec(2, 0.0, 1.0, "sin_cos"), Named("tanh"), 12, mode="spline_edges", seed=7)
    yield "spline_edges", rep.kan, {"target": "sin_cos", "units": 12, "seed": 7}


def probe_points(n, count=16):
    # dyadic probes so that gadget outputs are exactly representable
    rng = np.random.default_rng(20240)
    return np.round(rng.uniform(-2.0, 2.0, size=(count, n)) * 64) / 64


def main(out_dir=GOLDEN):
    os.makedirs(out_dir, exist_ok=True)
    for name, net, extra in builders():
        X = probe_points(net.input_width)
        meta = {
            "builder": name,
            "dictionary": collect_affine_dictionary(net),
            "points": X.tolist(),
            "values": net(X).tolist(),
            **extra,
        }
        path = os.path.join(out_dir, name + ".json")
        save_network(path, net, meta)
        print(f"{path}: depth {net.depth}, {net.num_edges} edges")


if __name__ == "__main__":
    main(*sys.argv[1:])
