"""Edge-function variants, the base-function registry and B-spline spaces.

Every edge function is an immutable value object that is callable on scalars
or NumPy arrays.  Spline edges live in a :class:`SplineSpace` built from a
strictly increasing knot sequence with clamped ends; outside the knot
interval they continue as the boundary polynomial pieces, so every edge is
defined (and continuous) on the whole real line.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import _fallback as _fb
from .errors import RegistryError, StructureError

MAX_SPLINE_DEGREE = 63


# ---------------------------------------------------------------------------
# base-function registry
# ---------------------------------------------------------------------------

_BUILTIN_CODES = {"silu": _fb.SILU, "tanh": _fb.TANH, "relu": _fb.RELU}
_BUILTIN_FUNCS = {"silu": _fb.silu, "tanh": np.tanh, "relu": _fb.relu}
# Lipschitz constants of the builtins on all of R
_BUILTIN_LIPSCHITZ = {"silu": 1.09984, "tanh": 1.0, "relu": 1.0}
_TABLES = {}


def register_table(name, xs, ys):
    """Register a tabulated base function evaluated by linear interpolation.

    Outside ``[xs[0], xs[-1]]`` the end values are held constant.
    """
    if name in _BUILTIN_CODES:
        raise RegistryError(f"cannot shadow builtin base function {name!r}")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise StructureError("table needs matching 1-d xs and ys with at least two entries")
    if not np.all(np.diff(xs) > 0):
        raise StructureError("table abscissae must be strictly increasing")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise StructureError("table entries must be finite")
    xs.setflags(write=False)
    ys.setflags(write=False)
    _TABLES[name] = (xs, ys)


def unregister_table(name):
    _TABLES.pop(name, None)


def base_function(name):
    """Vectorized callable for a registered base-function id."""
    if name in _BUILTIN_FUNCS:
        return _BUILTIN_FUNCS[name]
    if name in _TABLES:
        xs, ys = _TABLES[name]
        return lambda t: np.interp(t, xs, ys)
    raise RegistryError(f"unknown base function {name!r}")


def base_lipschitz(name):
    if name in _BUILTIN_LIPSCHITZ:
        return _BUILTIN_LIPSCHITZ[name]
    if name in _TABLES:
        xs, ys = _TABLES[name]
        return float(np.max(np.abs(np.diff(ys) / np.diff(xs))))
    raise RegistryError(f"unknown base function {name!r}")


def registered_names():
    return sorted(_BUILTIN_CODES) + sorted(_TABLES)


# ---------------------------------------------------------------------------
# spline spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplineSpace:
    """Splines of degree ``degree`` on the knots ``t_0 < ... < t_M``.

    The basis is built on the clamped extension (end knots repeated
    ``degree + 1`` times), so ``dim == M + degree``.
    """

    degree: int
    knots: tuple

    def __post_init__(self):
        knots = tuple(float(t) for t in self.knots)
        object.__setattr__(self, "knots", knots)
        if not isinstance(self.degree, (int, np.integer)) or self.degree < 1:
            raise StructureError(f"spline degree must be a positive integer, got {self.degree!r}")
        if self.degree > MAX_SPLINE_DEGREE:
            raise StructureError(f"spline degree above {MAX_SPLINE_DEGREE} is not supported")
        object.__setattr__(self, "degree", int(self.degree))
        if len(knots) < 2:
            raise StructureError("a spline space needs at least two knots")
        if not all(math.isfinite(t) for t in knots):
            raise StructureError("knots must be finite")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise StructureError("knots must be strictly increasing")

    @classmethod
    def uniform(cls, degree, lo, hi, interior):
        """Space on ``interior`` equally spaced interior knots in ``[lo, hi]``."""
        return cls(degree, tuple(np.linspace(lo, hi, interior + 2)))

    @property
    def extended_knots(self):
        k = self.degree
        return (self.knots[0],) * k + self.knots + (self.knots[-1],) * k

    @property
    def dim(self):
        return len(self.knots) - 1 + self.degree

    @property
    def interval(self):
        return self.knots[0], self.knots[-1]

    def greville(self):
        """Greville abscissae: averages of ``degree`` consecutive interior extended knots."""
        ext = np.asarray(self.extended_knots)
        k = self.degree
        return np.array([ext[i + 1 : i + 1 + k].sum() / k for i in range(self.dim)])


def spline_basis(space, t):
    """All ``space.dim`` basis values at ``t``.

    A scalar ``t`` gives a vector, an array gives shape ``t.shape + (dim,)``.
    Inside the knot interval the values are nonnegative and sum to one.
    """
    ext = np.asarray(space.extended_knots)
    k = space.degree
    arr = np.asarray(t, dtype=float)
    flat = arr.reshape(-1)
    out = np.zeros((flat.size, space.dim))
    for p, tp in enumerate(flat):
        s, vals = _fb.basis_funs(ext, k, float(tp))
        out[p, s - k : s + 1] = vals
    return out[0] if arr.ndim == 0 else out.reshape(arr.shape + (space.dim,))


def affine_in_space(space, a, b):
    """Spline coefficients reproducing ``a*t + b`` on the knot interval.

    Uses the Greville abscissae: ``c_i = a * xi_i + b``.
    """
    if space.degree < 1:
        raise StructureError("affine reproduction needs degree >= 1")
    return tuple(float(v) for v in a * space.greville() + b)


# ---------------------------------------------------------------------------
# edge-function variants
# ---------------------------------------------------------------------------


def _num(x, what):
    x = float(x)
    if not math.isfinite(x):
        raise StructureError(f"{what} must be finite, got {x!r}")
    # normalize -0.0 so dictionaries and documents stay canonical
    return x + 0.0


class EdgeFunction:
    """Base class; subclasses are frozen dataclasses."""

    kind = None
    is_affine = False

    def __call__(self, t):
        raise NotImplementedError

    def _pack(self):
        """``(code, params)`` for the layer kernel, or ``None`` for Python-only edges."""
        return None


@dataclass(frozen=True)
class Affine(EdgeFunction):
    a: float
    b: float = 0.0

    kind = "affine"
    is_affine = True

    def __post_init__(self):
        object.__setattr__(self, "a", _num(self.a, "affine slope"))
        object.__setattr__(self, "b", _num(self.b, "affine intercept"))

    def __call__(self, t):
        return np.asarray(t, dtype=float) * self.a + self.b

    @property
    def pair(self):
        return (self.a, self.b)

    def _pack(self):
        return _fb.AFFINE, [self.a, self.b]


ZERO = Affine(0.0, 0.0)
IDENTITY = Affine(1.0, 0.0)


@dataclass(frozen=True)
class Named(EdgeFunction):
    """Registered base function, optionally scaled: ``t -> scale * f(t)``."""

    id: str
    scale: float = 1.0

    kind = "named"

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise StructureError("named edge needs a non-empty string id")
        object.__setattr__(self, "scale", _num(self.scale, "named scale"))

    def __call__(self, t):
        return self.scale * base_function(self.id)(np.asarray(t, dtype=float))

    def _pack(self):
        code = _BUILTIN_CODES.get(self.id)
        if code is None:
            base_function(self.id)  # raises for unknown ids
            return None
        return code, [self.scale]


@dataclass(frozen=True)
class Polynomial(EdgeFunction):
    """``sum coeffs[i] * t**i``; trailing zero coefficients are stripped."""

    coeffs: tuple

    kind = "poly"

    def __post_init__(self):
        coeffs = [_num(c, "polynomial coefficient") for c in self.coeffs]
        if not coeffs:
            raise StructureError("polynomial needs at least one coefficient")
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))

    @property
    def degree(self):
        return 0 if self.coeffs == (0.0,) else len(self.coeffs) - 1

    @property
    def leading(self):
        return self.coeffs[-1]

    def __call__(self, t):
        return _fb.horner(self.coeffs, t)

    def derivative(self):
        if len(self.coeffs) == 1:
            return Polynomial((0.0,))
        return Polynomial(tuple(i * c for i, c in enumerate(self.coeffs) if i > 0))

    def _pack(self):
        return _fb.POLY, [len(self.coeffs) - 1, *self.coeffs]


@dataclass(frozen=True)
class Spline(EdgeFunction):
    space: SplineSpace
    coeffs: tuple

    kind = "spline"

    def __post_init__(self):
        coeffs = tuple(_num(c, "spline coefficient") for c in self.coeffs)
        if len(coeffs) != self.space.dim:
            raise StructureError(f"spline needs {self.space.dim} coefficients, got {len(coeffs)}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def affine(cls, space, a, b):
        return cls(space, affine_in_space(space, a, b))

    def __call__(self, t):
        return _fb.deboor(self.space.extended_knots, self.space.degree, self.coeffs, t)

    def _block(self):
        ext = self.space.extended_knots
        return [self.space.degree, len(ext), *ext, *self.coeffs]

    def _pack(self):
        return _fb.SPLINE, self._block()


@dataclass(frozen=True)
class Composite(EdgeFunction):
    """``t -> w_b * base(t) + w_s * spline(t)``."""

    w_b: float
    base: Named
    w_s: float
    spline: Spline

    kind = "composite"

    def __post_init__(self):
        if not isinstance(self.base, Named):
            raise StructureError("composite base must be a Named edge")
        if not isinstance(self.spline, Spline):
            raise StructureError("composite spline must be a Spline edge")
        object.__setattr__(self, "w_b", _num(self.w_b, "composite w_b"))
        object.__setattr__(self, "w_s", _num(self.w_s, "composite w_s"))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.w_b * self.base(t) + self.w_s * self.spline(t)

    def _pack(self):
        base = self.base._pack()
        if base is None:
            return None
        code, (scale,) = base
        return _fb.COMPOSITE, [self.w_b, code, scale, self.w_s, *self.spline._block()]


def eval_edge(f, t):
    """Value of edge function ``f`` at the real ``t``."""
    return float(f(float(t)))


def scale_edge(f, c):
    """Edge computing ``c * f(t)`` within the same variant where possible."""
    c = float(c)
    if isinstance(f, Affine):
        return Affine(c * f.a, c * f.b)
    if isinstance(f, Named):
        return Named(f.id, c * f.scale)
    if isinstance(f, Polynomial):
        return Polynomial(tuple(c * a for a in f.coeffs))
    if isinstance(f, Spline):
        return Spline(f.space, tuple(c * a for a in f.coeffs))
    if isinstance(f, Composite):
        return Composite(c * f.w_b, f.base, c * f.w_s, f.spline)
    raise TypeError(f"cannot scale {type(f).__name__}")


HALF = Affine(0.5, 0.0)
NEGATE = Affine(-1.0, 0.0)
ONE = Affine(0.0, 1.0)

#: the five affine maps t->0, t->1, t->t, t->-t, t->t/2
A0 = frozenset({ZERO.pair, ONE.pair, IDENTITY.pair, NEGATE.pair, HALF.pair})
