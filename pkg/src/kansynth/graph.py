"""KAN computation graphs: data model, evaluation and structural composition.

A :class:`KanNetwork` is a list of :class:`Layer` objects.  Layer ``l`` maps
the ``n_{l-1}`` node values of the previous layer to ``n_l`` node values; node
``k`` sums ``psi_kj(h_j)`` over every incoming edge.  The last layer plays the
role of the output map.  Layers are addressed 1-based in error messages (the
input is layer 0).

Edge grids are dense in meaning but stored sparsely: any ``(k, j)`` pair
without a stored edge carries the zero map ``Affine(0, 0)``.
"""

from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType

import numpy as np

from . import _backend
from .edges import IDENTITY, ZERO, Affine, EdgeFunction
from .errors import EvaluationError, StructureError


class Layer:
    """One layer of edge functions, ``width`` output nodes by ``in_width`` inputs.

    ``edges`` maps ``(k, j)`` to the edge from input node ``j`` to output node
    ``k`` (both 0-based).  Zero maps are not stored.
    """

    def __init__(self, width, in_width, edges=None):
        if int(width) < 1 or int(in_width) < 1:
            raise StructureError(f"layer widths must be positive, got {width}x{in_width}")
        self.width = int(width)
        self.in_width = int(in_width)
        stored = {}
        for (k, j), f in (edges or {}).items():
            if not isinstance(f, EdgeFunction):
                raise StructureError(f"edge ({k}, {j}) is not an EdgeFunction: {f!r}")
            if not (0 <= k < self.width and 0 <= j < self.in_width):
                raise StructureError(f"edge ({k}, {j}) outside a {self.width}x{self.in_width} grid")
            if f != ZERO:
                stored[(int(k), int(j))] = f
        self._edges = MappingProxyType(dict(sorted(stored.items())))

    @classmethod
    def from_grid(cls, grid):
        """Build from a dense row-major grid ``grid[k][j]``."""
        rows = [list(r) for r in grid]
        if not rows or not rows[0]:
            raise StructureError("edge grid must be non-empty")
        in_width = len(rows[0])
        for k, r in enumerate(rows):
            if len(r) != in_width:
                raise StructureError(f"edge grid row {k} has {len(r)} entries, expected {in_width}")
        return cls(len(rows), in_width, {(k, j): f for k, r in enumerate(rows) for j, f in enumerate(r)})

    @classmethod
    def diagonal(cls, width, f=IDENTITY):
        return cls(width, width, {(k, k): f for k in range(width)})

    @property
    def edges(self):
        """Read-only mapping of the stored (nonzero) edges."""
        return self._edges

    def edge(self, k, j):
        if not (0 <= k < self.width and 0 <= j < self.in_width):
            raise IndexError(f"edge ({k}, {j}) outside a {self.width}x{self.in_width} grid")
        return self._edges.get((k, j), ZERO)

    def grid(self):
        return [[self.edge(k, j) for j in range(self.in_width)] for k in range(self.width)]

    @property
    def nnz(self):
        return len(self._edges)

    @property
    def has_implicit_zeros(self):
        return self.nnz < self.width * self.in_width

    def __eq__(self, other):
        if not isinstance(other, Layer):
            return NotImplemented
        return (self.width, self.in_width, dict(self._edges)) == (other.width, other.in_width, dict(other._edges))

    def __hash__(self):
        return hash((self.width, self.in_width, tuple(self._edges.items())))

    def __repr__(self):
        return f"Layer({self.width}x{self.in_width}, nnz={self.nnz})"

    @cached_property
    def packed(self):
        """CSR arrays consumed by the layer kernels (see ``_fallback``)."""
        from ._fallback import EXTERNAL

        nnz = self.nnz
        row_ptr = np.zeros(self.width + 1, dtype=np.int64)
        col = np.empty(nnz, dtype=np.int64)
        kind = np.empty(nnz, dtype=np.int32)
        poff = np.empty(nnz, dtype=np.int64)
        params = []
        external = []
        for e, ((k, j), f) in enumerate(self._edges.items()):
            row_ptr[k + 1] += 1
            col[e] = j
            poff[e] = len(params)
            packed = f._pack()
            if packed is None:
                kind[e] = EXTERNAL
                params.append(float(len(external)))
                external.append((f, j))
            else:
                kind[e], block = packed
                params.extend(block)
        np.cumsum(row_ptr, out=row_ptr)
        return row_ptr, col, kind, poff, np.asarray(params, dtype=float), tuple(external)

    def evaluate(self, h, kernels=None):
        """Node values for a batch ``h`` of shape (points, in_width)."""
        kernels = kernels or _backend.kernels
        row_ptr, col, kind, poff, params, external = self.packed
        ext_vals = np.empty((h.shape[0], len(external)))
        for i, (f, j) in enumerate(external):
            ext_vals[:, i] = f(h[:, j])
        return kernels.eval_layer(h, row_ptr, col, kind, poff, params, ext_vals)


class KanNetwork:
    """Layered KAN; immutable after construction."""

    def __init__(self, input_width, layers):
        self.input_width = int(input_width)
        if self.input_width < 1:
            raise StructureError("input width must be positive")
        layers = tuple(layers)
        if not layers:
            raise StructureError("a network needs at least one (output) layer")
        prev = self.input_width
        for i, layer in enumerate(layers, start=1):
            if not isinstance(layer, Layer):
                raise StructureError(f"expected a Layer, got {type(layer).__name__}", layer=i)
            if layer.in_width != prev:
                raise StructureError(
                    f"edge grid has {layer.in_width} columns but the previous layer has width {prev}", layer=i
                )
            prev = layer.width
        self.layers = layers

    @property
    def depth(self):
        """Number of layers, counting the output layer."""
        return len(self.layers)

    @property
    def hidden_layers(self):
        return len(self.layers) - 1

    @property
    def output_width(self):
        return self.layers[-1].width

    @property
    def widths(self):
        return [self.input_width] + [layer.width for layer in self.layers]

    @property
    def max_width(self):
        return max(self.widths)

    @property
    def num_edges(self):
        return sum(layer.nnz for layer in self.layers)

    def __eq__(self, other):
        if not isinstance(other, KanNetwork):
            return NotImplemented
        return self.input_width == other.input_width and self.layers == other.layers

    def __hash__(self):
        return hash((self.input_width, self.layers))

    def __repr__(self):
        return f"KanNetwork(widths={self.widths}, edges={self.num_edges})"

    def __call__(self, x, kernels=None):
        return eval_kan(self, x, kernels=kernels)


def _as_batch(net, x):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    batch = np.ascontiguousarray(arr.reshape(1, -1) if single else arr)
    if batch.ndim != 2 or batch.shape[1] != net.input_width:
        raise StructureError(
            f"input has {batch.shape[-1] if batch.ndim else 0} components but the network expects {net.input_width}",
            layer=1,
        )
    if not np.all(np.isfinite(batch)):
        raise EvaluationError("input contains non-finite values", layer=0)
    return batch, single


def _forward(net, h, kernels, keep):
    trace = [h] if keep else None
    with np.errstate(over="ignore", invalid="ignore"):
        for i, layer in enumerate(net.layers, start=1):
            h = layer.evaluate(h, kernels)
            if not np.all(np.isfinite(h)):
                raise EvaluationError("non-finite node value", layer=i)
            if keep:
                trace.append(h)
    return trace if keep else h


def eval_trace(net, x, kernels=None):
    """Node values of every layer (input first) for a batch of points."""
    h, _ = _as_batch(net, x)
    return _forward(net, h, kernels, keep=True)


def eval_kan(net, x, kernels=None):
    """Evaluate ``net`` at one point (1-d ``x``) or a batch (2-d ``x``)."""
    h, single = _as_batch(net, x)
    out = _forward(net, h, kernels, keep=False)
    return out[0] if single else out


def affine_closed_form(net):
    """``(M, v)`` with ``net(x) == M @ x + v`` if every edge is affine, else ``None``."""
    n = net.input_width
    M = np.eye(n)
    v = np.zeros(n)
    for layer in net.layers:
        newM = np.zeros((layer.width, M.shape[1]))
        newv = np.zeros(layer.width)
        for (k, j), f in layer.edges.items():
            if not isinstance(f, Affine):
                return None
            newM[k] += f.a * M[j]
            newv[k] += f.a * v[j] + f.b
        M, v = newM, newv
    return M, v


def collect_affine_dictionary(net):
    """Distinct ``(a, b)`` pairs of the affine edges, implicit zeros included."""
    pairs = set()
    for layer in net.layers:
        if layer.has_implicit_zeros:
            pairs.add(ZERO.pair)
        pairs.update(f.pair for f in layer.edges.values() if isinstance(f, Affine))
    return pairs


def non_affine_edges(net):
    """Distinct non-affine edge functions used by ``net``."""
    return {f for layer in net.layers for f in layer.edges.values() if not isinstance(f, Affine)}


# ---------------------------------------------------------------------------
# structural composition
# ---------------------------------------------------------------------------


def depth_equalize(net, target_depth):
    """Append width-preserving identity layers until ``net.depth == target_depth``."""
    if target_depth < net.depth:
        raise StructureError(f"target depth {target_depth} is below the current depth {net.depth}")
    pad = Layer.diagonal(net.output_width)
    return KanNetwork(net.input_width, net.layers + (pad,) * (target_depth - net.depth))


def parallel_many(nets):
    """Run networks with a common input side by side; outputs are concatenated.

    Shallower networks are padded with identity layers first.  Edges between
    different sub-networks are zero.
    """
    nets = list(nets)
    if not nets:
        raise StructureError("nothing to compose")
    n = nets[0].input_width
    for i, net in enumerate(nets):
        if net.input_width != n:
            raise StructureError(f"network {i} has input width {net.input_width}, expected {n}")
    depth = max(net.depth for net in nets)
    nets = [depth_equalize(net, depth) for net in nets]
    layers = []
    for ell in range(depth):
        edges = {}
        row = col = 0
        for net in nets:
            layer = net.layers[ell]
            col_shift = 0 if ell == 0 else col
            for (k, j), f in layer.edges.items():
                edges[(row + k, col_shift + j)] = f
            row += layer.width
            col += layer.in_width
        layers.append(Layer(row, n if ell == 0 else col, edges))
    return KanNetwork(n, layers)


def parallel_compose(a, b):
    return parallel_many([a, b])


def serial_compose(outer, inner):
    """Network computing ``outer(inner(x))``."""
    if inner.output_width != outer.input_width:
        raise StructureError(
            f"inner output width {inner.output_width} does not match outer input width {outer.input_width}"
        )
    return KanNetwork(inner.input_width, inner.layers + outer.layers)


def chain(*nets):
    """Serial composition of several networks, innermost first."""
    out = nets[0]
    for net in nets[1:]:
        out = serial_compose(net, out)
    return out


def single_layer(in_width, row_edges):
    """One-output network ``sum_j row_edges[j](x_j)``; ``row_edges`` maps j -> edge."""
    return KanNetwork(in_width, [Layer(1, in_width, {(0, j): f for j, f in row_edges.items()})])


def identity_network(width=1):
    return KanNetwork(width, [Layer.diagonal(width)])


def projection(n, j):
    """``x -> x_j`` for ``x`` in R^n."""
    return single_layer(n, {j: IDENTITY})


def lift_input(net, n, j):
    """Embed a scalar-input network so it reads coordinate ``j`` of an n-vector."""
    if net.input_width != 1:
        raise StructureError("only scalar-input networks can be lifted")
    first = net.layers[0]
    lifted = Layer(first.width, n, {(k, j): f for (k, _), f in first.edges.items()})
    return KanNetwork(n, (lifted,) + net.layers[1:])


def combine(net, row_edges, intercept=0.0):
    """Append a one-node layer ``sum_i row_edges[i](y_i)`` (+ intercept on edge 0)."""
    edges = dict(row_edges)
    if intercept:
        f = edges.get(0, ZERO)
        if not isinstance(f, Affine):
            raise StructureError("intercept must ride on an affine edge")
        edges[0] = Affine(f.a, f.b + intercept)
    return serial_compose(single_layer(net.output_width, edges), net)


# ---------------------------------------------------------------------------
# single-hidden-layer perceptrons
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MlpUnit:
    w: tuple
    b: float
    c: float

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(float(x) for x in self.w))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "c", float(self.c))


@dataclass(frozen=True)
class MlpNetwork:
    """``G(x) = sum_k c_k * sigma(w_k . x + b_k)``."""

    n: int
    units: tuple
    activation: EdgeFunction

    def __post_init__(self):
        units = tuple(u if isinstance(u, MlpUnit) else MlpUnit(*u) for u in self.units)
        if not units:
            raise StructureError("an MLP needs at least one unit")
        for i, u in enumerate(units):
            if len(u.w) != self.n:
                raise StructureError(f"unit {i} has {len(u.w)} weights, expected {self.n}")
        if not isinstance(self.activation, EdgeFunction):
            raise StructureError("activation must be an EdgeFunction")
        object.__setattr__(self, "units", units)

    @classmethod
    def from_arrays(cls, W, b, c, activation):
        W = np.atleast_2d(np.asarray(W, dtype=float))
        return cls(W.shape[1], tuple(MlpUnit(w, bk, ck) for w, bk, ck in zip(W, b, c)), activation)

    @property
    def W(self):
        return np.array([u.w for u in self.units])

    @property
    def b(self):
        return np.array([u.b for u in self.units])

    @property
    def c(self):
        return np.array([u.c for u in self.units])

    def preactivations(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X @ self.W.T + self.b

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        out = self.activation(self.preactivations(X)) @ self.c
        return out[0] if X.ndim == 1 else out
