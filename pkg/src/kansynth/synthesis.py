"""Network builders that realize target functions exactly with restricted edges.

Each builder returns either a :class:`~kansynth.graph.KanNetwork` or a
:class:`GadgetReport` that also records the affine dictionary the network
draws from.  The dyadic builders only ever emit the five maps in
:data:`~kansynth.edges.A0`; the polynomial builders use those plus the finite
family recorded by :func:`square_gadget`.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .dyadic import Dyadic
from .edges import A0, HALF, IDENTITY, NEGATE, ONE, Affine, Polynomial, scale_edge
from .errors import ConditioningError, GadgetSizeError, StructureError
from .graph import (
    KanNetwork,
    Layer,
    collect_affine_dictionary,
    combine,
    identity_network,
    lift_input,
    parallel_many,
    projection,
    serial_compose,
    single_layer,
)

DEFAULT_FAN_OUT_BOUND = 4096
AUTO_FAN_OUT_LIMIT = 64  # "auto" switches to shift-and-add above this numerator
DEFAULT_STEPS = (1.0, 0.5, 2.0, 0.25)
MIN_LEADING = 1e-12


@dataclass(frozen=True)
class GadgetReport:
    network: KanNetwork
    dictionary: frozenset
    depth: int
    max_width: int
    family: frozenset = None
    metadata: dict = field(default_factory=dict, compare=False)

    @classmethod
    def of(cls, network, family=None, **metadata):
        return cls(
            network,
            frozenset(collect_affine_dictionary(network)),
            network.depth,
            network.max_width,
            None if family is None else frozenset(family),
            metadata,
        )

    @property
    def within_family(self):
        return self.family is None or self.dictionary <= self.family

    def __call__(self, x):
        return self.network(x)


# ---------------------------------------------------------------------------
# perceptrons
# ---------------------------------------------------------------------------


def _inner_layer(mlp):
    # whole bias on the first coordinate
    edges = {}
    for k, u in enumerate(mlp.units):
        for j, w in enumerate(u.w):
            edges[(k, j)] = Affine(w, u.b if j == 0 else 0.0)
    return Layer(len(mlp.units), mlp.n, edges)


def mlp_to_kan_shallow(mlp, affine_outer=False):
    """One-hidden-layer KAN with affine inner edges and outer edges ``c_k * sigma``.

    With ``affine_outer`` the scaling is split off into a trailing layer of
    ``Affine(c_k, 0)`` edges instead, so only unscaled ``sigma`` edges appear.
    """
    if affine_outer:
        return mlp_to_kan_two_hidden(mlp)
    inner = _inner_layer(mlp)
    outer = Layer(1, len(mlp.units), {(0, k): scale_edge(mlp.activation, u.c) for k, u in enumerate(mlp.units)})
    return KanNetwork(mlp.n, [inner, outer])


def mlp_to_kan_two_hidden(mlp):
    """Three-layer KAN: affine inner edges, diagonal sigma, affine output scalings."""
    N = len(mlp.units)
    return KanNetwork(
        mlp.n,
        [
            _inner_layer(mlp),
            Layer.diagonal(N, mlp.activation),
            Layer(1, N, {(0, k): Affine(u.c, 0.0) for k, u in enumerate(mlp.units)}),
        ],
    )


# ---------------------------------------------------------------------------
# dyadic gadgets (edges from A0 only)
# ---------------------------------------------------------------------------


def _scalar(layers):
    return KanNetwork(1, layers or [Layer.diagonal(1)])


def _halvings(r):
    return [Layer(1, 1, {(0, 0): HALF})] * r


def _fan_out(m):
    """m copies of the incoming value summed at one node."""
    if m == 1:
        return []
    return [Layer(m, 1, {(k, 0): IDENTITY for k in range(m)}), Layer(1, m, {(0, k): IDENTITY for k in range(m)})]


def _shift_add(m, negative):
    """Integer multiplication by ``m`` in ``bit_length(m)`` layers of width 3.

    Two copies of the accumulator are kept so ``acc + acc`` needs no repeated
    edge; the third node carries the multiplicand.
    """
    if m == 1:
        return [Layer(1, 1, {(0, 0): NEGATE})] if negative else []
    bits = bin(m)[3:]
    layers = [Layer(3, 1, {(0, 0): IDENTITY, (1, 0): IDENTITY, (2, 0): IDENTITY})]
    for bit in bits:
        edges = {(0, 0): IDENTITY, (0, 1): IDENTITY, (1, 0): IDENTITY, (1, 1): IDENTITY, (2, 2): IDENTITY}
        if bit == "1":
            edges[(0, 2)] = IDENTITY
            edges[(1, 2)] = IDENTITY
        layers.append(Layer(3, 3, edges))
    layers.append(Layer(1, 3, {(0, 0): NEGATE if negative else IDENTITY}))
    return layers


def _use_fan_out(m, bound, strategy):
    if strategy == "binary":
        return False
    if strategy not in ("fanout", "auto"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if abs(m) <= (bound if strategy == "fanout" else min(bound, AUTO_FAN_OUT_LIMIT)):
        return True
    if strategy == "fanout":
        raise GadgetSizeError(f"|numerator| {abs(m)} exceeds the fan-out bound {bound}")
    return False


def dyadic_linear(q, fan_out_bound=DEFAULT_FAN_OUT_BOUND, strategy="fanout"):
    """Scalar network ``t -> q*t`` for dyadic ``q`` using only A0 edges.

    ``fanout`` halves ``r`` times, fans out to ``|m|`` identity edges summed at
    one node and negates if ``m < 0``.  ``binary`` replaces the fan-out by
    shift-and-add over the bits of ``|m|`` (depth grows with log|m| instead of
    width with |m|).  ``auto`` fans out only for ``|m| <= AUTO_FAN_OUT_LIMIT`` (and the bound),
    which keeps layers narrow when many coefficients are compiled together.
    """
    q = Dyadic.coerce(q)
    if q.m == 0:
        return _scalar([Layer(1, 1)])
    m = abs(q.m)
    if _use_fan_out(q.m, fan_out_bound, strategy):
        tail = _fan_out(m) + ([Layer(1, 1, {(0, 0): NEGATE})] if q.m < 0 else [])
    else:
        tail = _shift_add(m, q.m < 0)
    return _scalar(_halvings(q.r) + tail)


def dyadic_constant(b, fan_out_bound=DEFAULT_FAN_OUT_BOUND, strategy="fanout"):
    """Scalar network ``t -> b`` for dyadic ``b`` using only A0 edges."""
    b = Dyadic.coerce(b)
    if b.m == 0:
        return _scalar([Layer(1, 1)])
    m = abs(b.m)
    if _use_fan_out(b.m, fan_out_bound, strategy):
        layers = [Layer(m, 1, {(k, 0): ONE for k in range(m)})]
        if m > 1:
            layers.append(Layer(1, m, {(0, k): IDENTITY for k in range(m)}))
        if b.m < 0:
            layers.append(Layer(1, 1, {(0, 0): NEGATE}))
    else:
        layers = [Layer(1, 1, {(0, 0): ONE})] + _shift_add(m, b.m < 0)
    return _scalar(layers + _halvings(b.r))


def dyadic_affine_gadget(q, b, fan_out_bound=DEFAULT_FAN_OUT_BOUND, strategy="fanout"):
    """Scalar gadget ``t -> q*t + b`` over A0: linear and constant parts in parallel, then summed."""
    q, b = Dyadic.coerce(q), Dyadic.coerce(b)
    both = parallel_many([dyadic_linear(q, fan_out_bound, strategy), dyadic_constant(b, fan_out_bound, strategy)])
    net = combine(both, {0: IDENTITY, 1: IDENTITY})
    return GadgetReport.of(net, family=A0, builder="dyadic_affine", q=str(q), b=str(b))


def _check_activation(sigma):
    if isinstance(sigma, Affine):
        raise StructureError("the activation must be a non-affine edge function (Named or Polynomial)")


def dyadic_mlp_gadget(mlp, fan_out_bound=DEFAULT_FAN_OUT_BOUND, strategy="fanout"):
    """Deep KAN over ``A0 + {sigma}`` computing a dyadic-parameter MLP exactly.

    Per unit: parallel dyadic branches ``w_kj * x_j`` and ``b_k`` summed at one
    node, a single ``sigma`` edge, then a dyadic ``c_k`` scaling; units run in
    parallel and are summed.
    """
    _check_activation(mlp.activation)
    n = mlp.n
    units = []
    for u in mlp.units:
        branches = [lift_input(dyadic_linear(w, fan_out_bound, strategy), n, j) for j, w in enumerate(u.w)]
        branches.append(lift_input(dyadic_constant(u.b, fan_out_bound, strategy), n, 0))
        pre = combine(parallel_many(branches), {i: IDENTITY for i in range(n + 1)})
        act = serial_compose(single_layer(1, {0: mlp.activation}), pre)
        units.append(serial_compose(dyadic_linear(u.c, fan_out_bound, strategy), act))
    net = combine(parallel_many(units), {k: IDENTITY for k in range(len(units))})
    return GadgetReport.of(net, family=A0, builder="dyadic_mlp", units=len(units))


# ---------------------------------------------------------------------------
# polynomial sigma: finite differences, squaring, products, polynomials
# ---------------------------------------------------------------------------


def _require_poly(sigma):
    if not isinstance(sigma, Polynomial):
        raise StructureError("sigma must be a Polynomial edge")
    if sigma.degree < 2:
        raise StructureError(f"sigma must have degree >= 2, got {sigma.degree}")


def difference_weights(d):
    """Weights of the (d-2)-fold forward difference: ``(-1)**(d-2-r) * C(d-2, r)``."""
    m = d - 2
    return [(-1) ** (m - r) * comb(m, r) for r in range(m + 1)]


def shifted_sum_coefficients(sigma, h):
    """Exact coefficients of ``sum_r c_r sigma(t + r h)`` (ascending powers)."""
    a = [Fraction(x) for x in sigma.coeffs]
    h = Fraction(h)
    d = len(a) - 1
    out = [Fraction(0)] * (d + 1)
    for r, c in enumerate(difference_weights(d)):
        shift = r * h
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            # (t + shift)^i = sum_p C(i, p) shift^(i-p) t^p
            for p in range(i + 1):
                out[p] += c * ai * comb(i, p) * shift ** (i - p)
    return out


def fd_quadratic_gadget(sigma, h=1.0):
    """Two-hidden-layer KAN for ``q(t) = sum_r c_r sigma(t + r h) = A t^2 + B t + C``.

    Layer 1 shifts ``t + r h``, layer 2 applies ``sigma`` on the diagonal and
    the output scales by ``c_r``.  ``A``, ``B``, ``C`` come from exact
    rational expansion.
    """
    _require_poly(sigma)
    h = float(h)
    if h == 0.0:
        raise StructureError("step h must be nonzero")
    d = sigma.degree
    weights = difference_weights(d)
    size = len(weights)
    net = KanNetwork(
        1,
        [
            Layer(size, 1, {(r, 0): Affine(1.0, r * h) for r in range(size)}),
            Layer.diagonal(size, sigma),
            Layer(1, size, {(0, r): Affine(float(c), 0.0) for r, c in enumerate(weights)}),
        ],
    )
    coef = shifted_sum_coefficients(sigma, h)
    if any(coef[3:]):
        raise ConditioningError("finite-difference expansion did not reduce to a quadratic")
    return GadgetReport.of(
        net,
        builder="fd_quadratic",
        A=float(coef[2]),
        B=float(coef[1]),
        C=float(coef[0]),
        A_formula=sigma.leading * factorial(d) / 2 * h ** (d - 2),
        weights=weights,
        h=h,
        sigma=list(sigma.coeffs),
    )


def square_gadget(sigma, h=None):
    """Scalar KAN computing ``t -> t**2`` from a polynomial ``sigma`` of degree >= 2.

    The quadratic ``q`` and the identity run in parallel and are recombined as
    ``q/A - (B/A) t - C/A``.  With ``h=None`` the steps 1, 1/2, 2, 1/4 are
    tried in turn until ``|A|`` is usable.  The recorded dictionary is the
    finite affine family this gadget needs.
    """
    _require_poly(sigma)
    steps = DEFAULT_STEPS if h is None else (float(h),)
    fd = None
    for step in steps:
        cand = fd_quadratic_gadget(sigma, step)
        if abs(cand.metadata["A"]) >= MIN_LEADING:
            fd = cand
            break
    if fd is None:
        raise ConditioningError(f"|A| < {MIN_LEADING} for every step tried; choose a different h")
    A, B, C = fd.metadata["A"], fd.metadata["B"], fd.metadata["C"]
    both = parallel_many([fd.network, identity_network(1)])
    net = combine(both, {0: Affine(1.0 / A, 0.0), 1: Affine(-B / A, 0.0)}, intercept=-C / A)
    meta = {k: fd.metadata[k] for k in ("A", "B", "C", "h", "sigma")}
    return GadgetReport.of(net, builder="square", **meta)


def multiply_gadget(sq, dyadic=False):
    """Two-input KAN ``(u, v) -> u*v`` from squaring branches on ``u + v``, ``u``, ``v``.

    The branches are recombined with weights 1/2, -1/2, -1/2.  With ``dyadic``
    the recombination uses identity and negation edges followed by a halving
    layer, keeping every new edge inside A0.
    """
    s = sq.network if isinstance(sq, GadgetReport) else sq
    if s.input_width != 1 or s.output_width != 1:
        raise StructureError("squaring network must be scalar to scalar")
    branches = [
        serial_compose(s, single_layer(2, {0: IDENTITY, 1: IDENTITY})),
        lift_input(s, 2, 0),
        lift_input(s, 2, 1),
    ]
    both = parallel_many(branches)
    if dyadic:
        summed = combine(both, {0: IDENTITY, 1: NEGATE, 2: NEGATE})
        return serial_compose(KanNetwork(1, [Layer(1, 1, {(0, 0): HALF})]), summed)
    return combine(both, {0: Affine(0.5, 0.0), 1: Affine(-0.5, 0.0), 2: Affine(-0.5, 0.0)})


def coefficient_value(c):
    """Float value of a coefficient given as a number, Fraction or string (``"3/2^2"``, ``"1/3"``)."""
    if isinstance(c, str):
        text = c.replace(" ", "")
        if "^" in text:
            return float(Dyadic.parse(text))
        return float(Fraction(text))
    return float(c)


def _normalize_monomials(monomials, n):
    out = []
    for exps, coeff in monomials:
        exps = tuple(int(e) for e in exps)
        if any(e < 0 for e in exps):
            raise StructureError(f"negative exponent in {exps}")
        out.append((exps, coeff))
    widths = {len(e) for e, _ in out}
    if n is None:
        if not widths:
            raise StructureError("empty polynomial needs an explicit input width")
        n = widths.pop() if len(widths) == 1 else None
    if n is None or any(w != n for w in widths):
        raise StructureError("all exponent vectors must have the same length")
    return out, n


def monomial_network(exps, mul):
    """Network for ``prod_j x_j**exps[j]`` by left-folding ``mul`` over the factors."""
    n = len(exps)
    factors = [j for j, e in enumerate(exps) for _ in range(e)]
    if not factors:
        raise StructureError("constant monomials have no factors")
    acc = projection(n, factors[0])
    for j in factors[1:]:
        acc = serial_compose(mul, parallel_many([acc, projection(n, j)]))
    return acc


def polynomial_gadget(monomials, sigma, h=None, n=None, dyadic=False,
                      fan_out_bound=DEFAULT_FAN_OUT_BOUND, strategy="auto"):
    """KAN over affine edges and ``sigma`` computing a multivariate polynomial.

    ``monomials`` is a list of ``(exponent_vector, coefficient)``.  Monomials
    are built with the product gadget and combined affinely.  With ``dyadic``
    every coefficient must be dyadic and is applied through A0 gadgets, so the
    whole network draws from ``A0`` plus the squaring family.
    """
    _require_poly(sigma)
    monomials, n = _normalize_monomials(monomials, n)
    sq = square_gadget(sigma, h)
    mul = multiply_gadget(sq, dyadic=dyadic)
    meta = dict(builder="polynomial", monomials=[[list(e), str(c)] for e, c in monomials], sigma=list(sigma.coeffs))

    if dyadic:
        const = sum((Dyadic.coerce(c).fraction for e, c in monomials if not any(e)), Fraction(0))
        terms = []
        for exps, c in monomials:
            c = Dyadic.coerce(c)
            if any(exps) and c.m != 0:
                terms.append(serial_compose(dyadic_linear(c, fan_out_bound, strategy), monomial_network(exps, mul)))
        if const != 0 or not terms:
            terms.append(lift_input(dyadic_constant(Dyadic.from_fraction(const), fan_out_bound, strategy), n, 0))
        net = combine(parallel_many(terms), {i: IDENTITY for i in range(len(terms))})
        return GadgetReport.of(net, family=A0 | sq.dictionary, dyadic=True, **meta)

    const = sum(coefficient_value(c) for e, c in monomials if not any(e))
    terms = [(monomial_network(e, mul), coefficient_value(c)) for e, c in monomials if any(e) and coefficient_value(c) != 0.0]
    if not terms:
        net = single_layer(n, {0: Affine(0.0, const)})
    else:
        both = parallel_many([t for t, _ in terms])
        net = combine(both, {i: Affine(c, 0.0) for i, (_, c) in enumerate(terms)}, intercept=const)
    return GadgetReport.of(net, dyadic=False, **meta)


def evaluate_polynomial(monomials, X):
    """Direct evaluation of a sparse monomial list at the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.zeros(X.shape[0])
    for exps, c in monomials:
        out += coefficient_value(c) * np.prod(X ** np.asarray(exps, dtype=float), axis=1)
    return out
