"""Pure NumPy implementation of the layer-evaluation kernel.

Mirrors ``_kernels.pyx`` operation for operation: every node accumulates its
incoming edge values in ascending column order starting from ``0.0``, and the
per-edge arithmetic (Horner, de Boor, ``a*t + b``) uses the same operation
order, so affine/polynomial/spline networks evaluate bitwise-identically on
both backends.

Packed layer format (CSR over rows = output nodes)::

    row_ptr[k]..row_ptr[k+1]   edges into node k, sorted by column
    col[e]                     source node of edge e
    kind[e]                    edge kind code (see below)
    poff[e]                    offset of the edge's block in ``params``

Parameter blocks::

    AFFINE     a, b
    POLY       d, c_0 .. c_d
    SILU/TANH/RELU  scale
    SPLINE     k, n, ext_0 .. ext_{n-1}, c_0 .. c_{n-k-2}
    COMPOSITE  w_b, base_code, base_scale, w_s, <SPLINE block>
    EXTERNAL   column index into the precomputed ``ext_vals`` matrix
"""

import numpy as np

AFFINE = 0
POLY = 1
SILU = 2
TANH = 3
RELU = 4
SPLINE = 5
COMPOSITE = 6
EXTERNAL = 7

NAME = "python"


def silu(t):
    with np.errstate(over="ignore"):
        return t / (1.0 + np.exp(-t))


def relu(t):
    return np.where(t > 0.0, t, 0.0)


BASE_FUNCTIONS = {SILU: silu, TANH: np.tanh, RELU: relu}


def horner(coeffs, t):
    """Evaluate ``sum coeffs[i] * t**i`` by Horner's rule."""
    t = np.asarray(t, dtype=float)
    acc = np.full(t.shape, float(coeffs[-1]))
    for c in coeffs[-2::-1]:
        acc = acc * t + c
    return acc


def find_span(ext, k, t):
    """Knot-span index for each ``t``, clamped to the valid range.

    Points left of the first knot use the first span and points at or right
    of the last knot use the last span, which makes de Boor evaluation extend
    the boundary polynomial pieces.
    """
    n = len(ext)
    s = np.searchsorted(ext, t, side="right") - 1
    return np.clip(s, k, n - k - 2)


def deboor(ext, k, coeffs, t):
    """Evaluate ``sum c_i B_i(t)`` with de Boor's algorithm (vectorized over t)."""
    ext = np.asarray(ext, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    s = find_span(ext, k, t)
    d = [coeffs[s - k + j] for j in range(k + 1)]
    for r in range(1, k + 1):
        for j in range(k, r - 1, -1):
            i = s - k + j
            alpha = (t - ext[i]) / (ext[i + k + 1 - r] - ext[i])
            d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j]
    return d[k]


def basis_funs(ext, k, t):
    """Non-vanishing B-spline values at ``t`` (scalar).

    Returns ``(span, values)`` where ``values[r]`` is ``B_{span-k+r}(t)``.
    Cox-de Boor triangle with the 0/0 := 0 convention.
    """
    s = int(find_span(ext, k, np.float64(t)))
    left = [0.0] * (k + 1)
    right = [0.0] * (k + 1)
    vals = [1.0] + [0.0] * k
    for j in range(1, k + 1):
        left[j] = t - ext[s + 1 - j]
        right[j] = ext[s + j] - t
        saved = 0.0
        for r in range(j):
            denom = right[r + 1] + left[j - r]
            temp = vals[r] / denom if denom != 0.0 else 0.0
            vals[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        vals[j] = saved
    return s, vals


def _spline_block(params, off):
    k = int(params[off])
    n = int(params[off + 1])
    ext = params[off + 2 : off + 2 + n]
    coeffs = params[off + 2 + n : off + 2 + n + (n - k - 1)]
    return ext, k, coeffs


def eval_packed(code, params, off, t):
    """Evaluate one packed edge on a vector of inputs."""
    if code == AFFINE:
        return t * params[off] + params[off + 1]
    if code == POLY:
        d = int(params[off])
        return horner(params[off + 1 : off + 2 + d], t)
    if code in BASE_FUNCTIONS:
        return params[off] * BASE_FUNCTIONS[code](t)
    if code == SPLINE:
        ext, k, coeffs = _spline_block(params, off)
        return deboor(ext, k, coeffs, t)
    if code == COMPOSITE:
        base = BASE_FUNCTIONS[int(params[off + 1])]
        ext, k, coeffs = _spline_block(params, off + 4)
        return params[off] * (params[off + 2] * base(t)) + params[off + 3] * deboor(ext, k, coeffs, t)
    raise ValueError(f"unknown edge code {code}")


def eval_layer(h, row_ptr, col, kind, poff, params, ext_vals):
    """Evaluate one packed layer on a batch ``h`` of shape (points, in_width)."""
    npts = h.shape[0]
    width = row_ptr.shape[0] - 1
    out = np.zeros((npts, width))
    counts = np.diff(row_ptr)
    if counts.size == 0 or counts.max() == 0:
        return out
    # slot s holds the s-th incoming edge of every node, so each node still
    # sums its edges in column order
    for s in range(int(counts.max())):
        rows = np.nonzero(counts > s)[0]
        idx = row_ptr[rows] + s
        kinds = kind[idx]
        vals = np.empty((npts, rows.size))
        for code in np.unique(kinds):
            sel = np.nonzero(kinds == code)[0]
            e = idx[sel]
            off = poff[e]
            if code == AFFINE:
                vals[:, sel] = h[:, col[e]] * params[off] + params[off + 1]
            elif code in BASE_FUNCTIONS:
                vals[:, sel] = params[off] * BASE_FUNCTIONS[code](h[:, col[e]])
            elif code == EXTERNAL:
                vals[:, sel] = ext_vals[:, params[off].astype(np.intp)]
            else:
                for i, ei in zip(sel, e):
                    vals[:, i] = eval_packed(code, params, poff[ei], h[:, col[ei]])
        out[:, rows] += vals
    return out
