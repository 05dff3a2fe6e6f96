"""Desk-scale density experiments.

Fit a shallow ``sigma``-network to a target by ridge regression over random
features, optionally round its parameters to dyadic rationals, compile the
result into a KAN and measure uniform errors on a tensor grid.  Grid maxima
only lower-bound the true sup norm over the box.
"""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np

from . import synthesis
from .dyadic import round_to_dyadic
from .edges import Affine, Composite, Named, Polynomial, Spline, SplineSpace, base_lipschitz
from .errors import FitError, StructureError
from .graph import KanNetwork, Layer, MlpNetwork, MlpUnit, eval_trace

MODES = ("shallow", "two_hidden", "dyadic_A0", "spline_edges")
DEFAULT_RIDGE = 1e-8
DEFAULT_DYADIC_SCALE = 30


def _sin_cos(X):
    return np.sin(np.pi * X[:, 0]) * np.cos(np.pi * X[:, 1])


TARGETS = {
    "zero": lambda X: np.zeros(X.shape[0]),
    "one": lambda X: np.ones(X.shape[0]),
    "square": lambda X: X[:, 0] ** 2,
    "sin_cos": _sin_cos,
    "sine_product": lambda X: np.prod(np.sin(np.pi * X), axis=1),
    "radial_gaussian": lambda X: np.exp(-np.sum((X - 0.5) ** 2, axis=1) / 0.1),
    "max_coordinate": lambda X: np.max(X, axis=1),
}


def default_grid_density(n):
    return 101 if n <= 2 else 21 if n == 3 else 11


@dataclass(frozen=True)
class TargetSpec:
    """A target function on the box ``prod_j [lower_j, upper_j]``.

    ``function`` is a registry name from :data:`TARGETS` or a callable taking
    an array of shape (points, n).  Tabulated targets built with
    :meth:`from_samples` are only defined on their sample points, which then
    replace the tensor grid.
    """

    dimension: int
    lower: tuple
    upper: tuple
    function: object
    grid_density: int = None
    samples: tuple = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        lower = tuple(float(v) for v in np.broadcast_to(self.lower, (self.dimension,)))
        upper = tuple(float(v) for v in np.broadcast_to(self.upper, (self.dimension,)))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.dimension < 1:
            raise StructureError("target dimension must be positive")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise StructureError("every box side needs lower < upper")
        if self.grid_density is None:
            object.__setattr__(self, "grid_density", default_grid_density(self.dimension))
        if self.grid_density < 2:
            raise StructureError("grid density must be at least 2")
        if isinstance(self.function, str) and self.function not in TARGETS and self.samples is None:
            raise StructureError(f"unknown target {self.function!r}; known: {sorted(TARGETS)}")

    @classmethod
    def box(cls, function, dimension=1, lower=0.0, upper=1.0, grid_density=None):
        return cls(dimension, lower, upper, function, grid_density)

    @classmethod
    def from_samples(cls, points, values):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.asarray(values, dtype=float).reshape(-1)
        if points.shape[0] != values.size:
            raise StructureError("need one value per sample point")
        lo, hi = points.min(axis=0), points.max(axis=0)
        hi = np.where(hi > lo, hi, lo + 1.0)
        return cls(points.shape[1], tuple(lo), tuple(hi), "tabulated", 2, (points, values))

    def grid(self, density=None):
        if self.samples is not None:
            return self.samples[0]
        density = density or self.grid_density
        axes = [np.linspace(lo, hi, density) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.samples is not None:
            points, values = self.samples
            if X.shape != points.shape or not np.array_equal(X, points):
                raise StructureError("tabulated targets are only defined on their sample points")
            return values
        f = TARGETS[self.function] if isinstance(self.function, str) else self.function
        return np.asarray(f(X), dtype=float).reshape(-1)

    @property
    def radius(self):
        """Largest Euclidean norm of a point in the box."""
        return math.sqrt(sum(max(lo * lo, hi * hi) for lo, hi in zip(self.lower, self.upper)))


@dataclass(frozen=True)
class SupError:
    value: float
    point: tuple

    def __float__(self):
        return self.value


def sup_error_on_grid(target, g, grid_density=None):
    """Max of ``|target - g|`` over the tensor grid, with the first maximizing point."""
    X = target.grid(grid_density)
    gv = np.asarray(g(X), dtype=float)
    if gv.ndim == 2:
        if gv.shape[1] != 1:
            raise StructureError(f"approximant has {gv.shape[1]} outputs, expected 1")
        gv = gv[:, 0]
    if gv.shape != (X.shape[0],):
        raise StructureError("approximant output does not match the grid")
    diff = np.abs(target(X) - gv)
    i = int(np.argmax(diff))
    return SupError(float(diff[i]), tuple(float(v) for v in X[i]))


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


def sample_features(target, num_units, rng):
    """Random ``(W, b)``: sphere directions, log-uniform scales, biases over the projected box."""
    n = target.dimension
    dirs = rng.normal(size=(num_units, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    scales = np.exp(rng.uniform(np.log(0.5), np.log(8.0), size=num_units))
    W = dirs * scales[:, None]
    lo, hi = np.asarray(target.lower), np.asarray(target.upper)
    proj_lo = np.minimum(W * lo, W * hi).sum(axis=1)
    proj_hi = np.maximum(W * lo, W * hi).sum(axis=1)
    b = -rng.uniform(proj_lo, proj_hi)
    return W, b


def ridge_solve(Phi, y, ridge):
    """Minimize ``|Phi c - y|^2 + ridge * |c|^2`` via an augmented least-squares system."""
    N = Phi.shape[1]
    A = np.vstack([Phi, math.sqrt(ridge) * np.eye(N)])
    rhs = np.concatenate([y, np.zeros(N)])
    c, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    if not np.all(np.isfinite(c)):
        raise FitError("ridge solution is not finite")
    return c


def fit_shallow_mlp(target, sigma, num_units, seed=0, ridge=DEFAULT_RIDGE):
    """Fit ``sum_k c_k sigma(w_k . x + b_k)`` to ``target`` on its grid.

    Deterministic given ``seed``.  No optimality claim; callers measure the
    achieved error themselves.
    """
    if num_units < 1:
        raise StructureError("need at least one unit")
    rng = np.random.default_rng(seed)
    W, b = sample_features(target, num_units, rng)
    X = target.grid()
    if num_units > X.shape[0]:
        warnings.warn(f"{num_units} units exceed the {X.shape[0]} grid points", RuntimeWarning, stacklevel=2)
    with np.errstate(over="ignore", invalid="ignore"):
        Phi = sigma(X @ W.T + b)
    if not np.all(np.isfinite(Phi)):
        raise FitError("feature matrix contains non-finite values")
    c = ridge_solve(Phi, target(X), ridge)
    return MlpNetwork(target.dimension, tuple(MlpUnit(w, bk, ck) for w, bk, ck in zip(W, b, c)), sigma)


# ---------------------------------------------------------------------------
# dyadic rounding
# ---------------------------------------------------------------------------


def round_dyadic(mlp, r):
    """Replace every parameter by its nearest multiple of ``2**-r``."""
    if not 0 <= r <= 52:
        raise ValueError(f"dyadic scale must be in [0, 52], got {r}")
    units = tuple(
        MlpUnit(tuple(round_to_dyadic(w, r) for w in u.w), round_to_dyadic(u.b, r), round_to_dyadic(u.c, r))
        for u in mlp.units
    )
    return MlpNetwork(mlp.n, units, mlp.activation)


def _preactivation_ranges(mlp, target):
    W, b = mlp.W, mlp.b
    lo, hi = np.asarray(target.lower), np.asarray(target.upper)
    return np.minimum(W * lo, W * hi).sum(axis=1) + b, np.maximum(W * lo, W * hi).sum(axis=1) + b


def lipschitz_on(sigma, lo, hi):
    """Upper bound for the Lipschitz constant of ``sigma`` on ``[lo, hi]``."""
    if isinstance(sigma, Affine):
        return abs(sigma.a)
    if isinstance(sigma, Named):
        return abs(sigma.scale) * base_lipschitz(sigma.id)
    if isinstance(sigma, Polynomial):
        M = max(abs(lo), abs(hi))
        return sum(i * abs(a) * M ** (i - 1) for i, a in enumerate(sigma.coeffs) if i > 0)
    raise StructureError(f"no Lipschitz bound for {type(sigma).__name__}")


def rounding_drift_bound(mlp, rounded, target):
    """Analytic bound on ``sup_K |H - H'|`` for an MLP and its rounded copy.

    Per unit ``|c' s(z') - c s(z)| <= |c'| Lip |z' - z| + |c' - c| |s(z)|`` with
    ``|z' - z| <= R |dw| + |db|`` on a box of radius ``R``.
    """
    R = target.radius
    lo0, hi0 = _preactivation_ranges(mlp, target)
    lo1, hi1 = _preactivation_ranges(rounded, target)
    total = 0.0
    for k, (u, v) in enumerate(zip(mlp.units, rounded.units)):
        lo, hi = min(lo0[k], lo1[k]), max(hi0[k], hi1[k])
        lip = lipschitz_on(mlp.activation, lo, hi)
        dz = R * math.dist(u.w, v.w) + abs(u.b - v.b)
        zs = np.linspace(lo0[k], hi0[k], 2001)
        sup_s = float(np.max(np.abs(mlp.activation(zs)))) + lip * (hi0[k] - lo0[k]) / 4000
        total += abs(v.c) * lip * dz + abs(v.c - u.c) * sup_s
    return total


# ---------------------------------------------------------------------------
# compilation to spline edges
# ---------------------------------------------------------------------------


def _padded_range(values, pad):
    lo, hi = float(np.min(values)), float(np.max(values))
    width = hi - lo
    if width <= 0.0:
        return lo - 0.5, hi + 0.5
    return lo - pad * width, hi + pad * width


def mlp_to_kan_spline(mlp, X, degree=3, interior=8, pad=0.1):
    """Two-hidden-layer KAN whose edges are all of the form ``w_b b(t) + w_s s(t)``.

    Affine edges become ``w_b = 0`` splines reproducing the map exactly;
    ``sigma`` edges become ``w_b = 1, w_s = 0``.  Each source node gets its own
    spline space with ``interior`` knots covering its observed range on ``X``
    (padded by ``pad``).  Zero edges stay implicit: the zero spline.
    """
    sigma = mlp.activation
    if not isinstance(sigma, Named):
        raise StructureError("spline edges need a Named base function as sigma")
    base = Named(sigma.id)
    net = synthesis.mlp_to_kan_two_hidden(mlp)
    trace = eval_trace(net, X)
    layers = []
    for ell, layer in enumerate(net.layers):
        spaces = {}
        edges = {}
        for (k, j), f in layer.edges.items():
            if j not in spaces:
                lo, hi = _padded_range(trace[ell][:, j], pad)
                spaces[j] = SplineSpace.uniform(degree, lo, hi, interior)
            space = spaces[j]
            if isinstance(f, Affine):
                edges[(k, j)] = Composite(0.0, base, 1.0, Spline.affine(space, f.a, f.b))
            else:
                edges[(k, j)] = Composite(f.scale, base, 0.0, Spline(space, (0.0,) * space.dim))
        layers.append(Layer(layer.width, layer.in_width, edges))
    return KanNetwork(net.input_width, layers)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitReport:
    mode: str
    mlp: MlpNetwork
    sup_error: float
    sup_point: tuple
    kan: KanNetwork
    kan_vs_mlp_error: float
    dyadic_mlp: MlpNetwork = None
    dyadic_scale: int = None
    dyadic_sup_error: float = None
    rounding_drift: float = None
    rounding_drift_bound: float = None
    dictionary: frozenset = None
    warnings: tuple = ()

    def summary(self):
        """JSON-ready scalar fields."""
        out = {
            "mode": self.mode,
            "units": len(self.mlp.units),
            "sup_error": self.sup_error,
            "sup_point": list(self.sup_point),
            "kan_vs_mlp_error": self.kan_vs_mlp_error,
            "kan_depth": self.kan.depth,
            "kan_max_width": self.kan.max_width,
            "kan_edges": self.kan.num_edges,
            "warnings": list(self.warnings),
        }
        if self.dyadic_mlp is not None:
            out.update(
                dyadic_scale=self.dyadic_scale,
                dyadic_sup_error=self.dyadic_sup_error,
                rounding_drift=self.rounding_drift,
                rounding_drift_bound=self.rounding_drift_bound,
            )
        if self.dictionary is not None:
            out["dictionary"] = sorted([a, b] for a, b in self.dictionary)
        return out


def _grid_values(g, X):
    v = np.asarray(g(X), dtype=float)
    return v[:, 0] if v.ndim == 2 else v


def approximate_pipeline(target, sigma, num_units, r=None, mode="two_hidden", seed=0, ridge=DEFAULT_RIDGE,
                         spline_degree=3, spline_interior=8, fan_out_bound=synthesis.DEFAULT_FAN_OUT_BOUND):
    """Fit, optionally round to dyadics, compile with the mode's builder and measure.

    ``kan_vs_mlp_error`` compares the compiled KAN with the network it was
    compiled from: the rounded MLP in ``dyadic_A0`` mode, the fitted one
    otherwise.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mlp = fit_shallow_mlp(target, sigma, num_units, seed, ridge)
    notes = tuple(str(w.message) for w in caught)
    fit_err = sup_error_on_grid(target, mlp)
    X = target.grid()

    if mode == "dyadic_A0" and r is None:
        r = DEFAULT_DYADIC_SCALE
    rounded = dyadic_err = drift = bound = None
    if r is not None:
        rounded = round_dyadic(mlp, r)
        dyadic_err = sup_error_on_grid(target, rounded).value
        drift = float(np.max(np.abs(mlp(X) - rounded(X))))
        bound = rounding_drift_bound(mlp, rounded, target)

    reference = mlp
    dictionary = None
    if mode == "shallow":
        kan = synthesis.mlp_to_kan_shallow(mlp)
    elif mode == "two_hidden":
        kan = synthesis.mlp_to_kan_two_hidden(mlp)
    elif mode == "dyadic_A0":
        gadget = synthesis.dyadic_mlp_gadget(rounded, fan_out_bound, strategy="auto")
        kan, reference, dictionary = gadget.network, rounded, gadget.dictionary
    else:
        kan = mlp_to_kan_spline(mlp, X, spline_degree, spline_interior)

    kan_err = float(np.max(np.abs(_grid_values(kan, X) - reference(X))))
    return FitReport(
        mode=mode,
        mlp=mlp,
        sup_error=fit_err.value,
        sup_point=fit_err.point,
        kan=kan,
        kan_vs_mlp_error=kan_err,
        dyadic_mlp=rounded,
        dyadic_scale=r,
        dyadic_sup_error=dyadic_err,
        rounding_drift=drift,
        rounding_drift_bound=bound,
        dictionary=dictionary,
        warnings=notes,
    )
