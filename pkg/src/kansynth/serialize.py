"""JSON network documents.

Schema (``format_version`` 1)::

    {
      "format_version": 1,
      "input_width": n0,
      "layers": [
        {"width": w, "edges": [<edge>, ...]},               # dense, row-major
        {"width": w, "sparse_edges": [[k, j, <edge>], ...]} # unlisted pairs are zero
      ],
      "metadata": {...}
    }

Edges are tagged objects: ``affine`` (a, b), ``named`` (id, optional scale),
``poly`` (coeffs), ``spline`` (degree, knots, coeffs) and ``composite``
(wb, base, optional base_scale, ws, spline).  Floats are written with
``repr`` so they parse back to the identical binary value.
"""

import json
import math
import os
import tempfile

from .edges import Affine, Composite, Named, Polynomial, Spline, SplineSpace
from .errors import DecodeError, FormatVersionError, StructureError, UnknownEdgeKindError
from .graph import KanNetwork, Layer

FORMAT_VERSION = 1
DENSE_LIMIT = 4096


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------


def _spline_doc(s):
    return {"degree": s.space.degree, "knots": list(s.space.knots), "coeffs": list(s.coeffs)}


def encode_edge(f):
    if isinstance(f, Affine):
        return {"kind": "affine", "a": f.a, "b": f.b}
    if isinstance(f, Named):
        doc = {"kind": "named", "id": f.id}
        if f.scale != 1.0:
            doc["scale"] = f.scale
        return doc
    if isinstance(f, Polynomial):
        return {"kind": "poly", "coeffs": list(f.coeffs)}
    if isinstance(f, Spline):
        return {"kind": "spline", **_spline_doc(f)}
    if isinstance(f, Composite):
        doc = {"kind": "composite", "wb": f.w_b, "base": f.base.id, "ws": f.w_s, "spline": _spline_doc(f.spline)}
        if f.base.scale != 1.0:
            doc["base_scale"] = f.base.scale
        return doc
    raise TypeError(f"cannot encode {type(f).__name__}")


def jsonable(value):
    """Convert sets, tuples and NumPy scalars in metadata to plain JSON values."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return sorted((jsonable(v) for v in value), key=repr)
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return value.item()
    return value


def network_document(net, metadata=None):
    layers = []
    for layer in net.layers:
        if layer.width * layer.in_width <= DENSE_LIMIT:
            edges = [encode_edge(f) for row in layer.grid() for f in row]
            layers.append({"width": layer.width, "edges": edges})
        else:
            sparse = [[k, j, encode_edge(f)] for (k, j), f in layer.edges.items()]
            layers.append({"width": layer.width, "sparse_edges": sparse})
    return {
        "format_version": FORMAT_VERSION,
        "input_width": net.input_width,
        "layers": layers,
        "metadata": jsonable(metadata or {}),
    }


def encode_network(net, metadata=None):
    """UTF-8 JSON bytes for ``net``."""
    doc = network_document(net, metadata)
    return (json.dumps(doc, allow_nan=False, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------


def _reject_constant(name):
    raise DecodeError(f"non-finite numeric literal {name}")


def _get(obj, key, path):
    if not isinstance(obj, dict):
        raise DecodeError("expected an object", path)
    if key not in obj:
        raise DecodeError(f"missing field {key!r}", path)
    return obj[key]


def _real(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DecodeError(f"expected a number, got {type(value).__name__}", path)
    value = float(value)
    if not math.isfinite(value):
        raise DecodeError("non-finite number", path)
    return value


def _int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise DecodeError(f"expected an integer, got {value!r}", path)
    if minimum is not None and value < minimum:
        raise DecodeError(f"expected an integer >= {minimum}, got {value}", path)
    return value


def _reals(value, path):
    if not isinstance(value, list):
        raise DecodeError("expected a list of numbers", path)
    return tuple(_real(v, f"{path}/{i}") for i, v in enumerate(value))


def _decode_spline(doc, path):
    space = SplineSpace(_int(_get(doc, "degree", path), f"{path}/degree", 1), _reals(_get(doc, "knots", path), f"{path}/knots"))
    return Spline(space, _reals(_get(doc, "coeffs", path), f"{path}/coeffs"))


def decode_edge(doc, path=""):
    kind = _get(doc, "kind", path)
    try:
        if kind == "affine":
            return Affine(_real(_get(doc, "a", path), f"{path}/a"), _real(_get(doc, "b", path), f"{path}/b"))
        if kind == "named":
            ident = _get(doc, "id", path)
            if not isinstance(ident, str):
                raise DecodeError("expected a string", f"{path}/id")
            return Named(ident, _real(doc.get("scale", 1.0), f"{path}/scale"))
        if kind == "poly":
            return Polynomial(_reals(_get(doc, "coeffs", path), f"{path}/coeffs"))
        if kind == "spline":
            return _decode_spline(doc, path)
        if kind == "composite":
            base = _get(doc, "base", path)
            if not isinstance(base, str):
                raise DecodeError("expected a string", f"{path}/base")
            return Composite(
                _real(_get(doc, "wb", path), f"{path}/wb"),
                Named(base, _real(doc.get("base_scale", 1.0), f"{path}/base_scale")),
                _real(_get(doc, "ws", path), f"{path}/ws"),
                _decode_spline(_get(doc, "spline", path), f"{path}/spline"),
            )
    except StructureError as exc:
        raise DecodeError(str(exc), path) from exc
    raise UnknownEdgeKindError(f"unknown edge kind {kind!r}", f"{path}/kind")


def _decode_layer(doc, in_width, index):
    path = f"/layers/{index}"
    width = _int(_get(doc, "width", path), f"{path}/width", 1)
    edges = {}
    if "edges" in doc:
        items = doc["edges"]
        if not isinstance(items, list):
            raise DecodeError("expected a list", f"{path}/edges")
        if len(items) != width * in_width:
            raise DecodeError(
                f"layer {index + 1}: edge grid has {len(items)} entries, expected {width}x{in_width}", f"{path}/edges"
            )
        for e, item in enumerate(items):
            edges[divmod(e, in_width)] = decode_edge(item, f"{path}/edges/{e}")
    elif "sparse_edges" in doc:
        items = doc["sparse_edges"]
        if not isinstance(items, list):
            raise DecodeError("expected a list", f"{path}/sparse_edges")
        for e, item in enumerate(items):
            ipath = f"{path}/sparse_edges/{e}"
            if not isinstance(item, list) or len(item) != 3:
                raise DecodeError("expected [k, j, edge]", ipath)
            k = _int(item[0], f"{ipath}/0", 0)
            j = _int(item[1], f"{ipath}/1", 0)
            if k >= width or j >= in_width:
                raise DecodeError(f"layer {index + 1}: edge ({k}, {j}) outside a {width}x{in_width} grid", ipath)
            if (k, j) in edges:
                raise DecodeError(f"duplicate edge ({k}, {j})", ipath)
            edges[(k, j)] = decode_edge(item[2], f"{ipath}/2")
    else:
        raise DecodeError("layer needs 'edges' or 'sparse_edges'", path)
    return Layer(width, in_width, edges)


def decode_document(doc):
    if not isinstance(doc, dict):
        raise DecodeError("document must be a JSON object")
    version = _get(doc, "format_version", "")
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"unsupported format_version {version!r}", "/format_version")
    n = _int(_get(doc, "input_width", ""), "/input_width", 1)
    layer_docs = _get(doc, "layers", "")
    if not isinstance(layer_docs, list) or not layer_docs:
        raise DecodeError("expected a non-empty list", "/layers")
    layers = []
    prev = n
    for i, ldoc in enumerate(layer_docs):
        layer = _decode_layer(ldoc, prev, i)
        layers.append(layer)
        prev = layer.width
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise DecodeError("expected an object", "/metadata")
    return KanNetwork(n, layers), metadata


def parse_json(data):
    """Parse JSON text or bytes, rejecting NaN/Infinity literals."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    return json.loads(data, parse_constant=_reject_constant)


def decode_network(data):
    """``(KanNetwork, metadata)`` from document bytes or text.

    Malformed JSON raises :class:`json.JSONDecodeError` (or ``UnicodeDecodeError``);
    schema problems raise :class:`DecodeError` naming the offending path.
    """
    return decode_document(parse_json(data))


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def write_atomic(path, data):
    """Write bytes via a temporary file in the target directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_network(path, net, metadata=None):
    write_atomic(path, encode_network(net, metadata))


def load_network(path):
    with open(path, "rb") as fh:
        return decode_network(fh.read())
