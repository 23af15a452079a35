"""Binary containers for lattice fields and critical-point records.

Layout: one magic line, a fixed-width decimal header length line, a JSON
header, then the raw arrays back to back as little-endian ``float64``.
Complex arrays are stored with real and imaginary parts interleaved (the
native ``complex128`` memory order), so round trips are bit exact.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np

from .clifford_lattice import LatticeDomain, SpinStructure
from .errors import ConfigurationError
from .fields import MapField, SpinorField, TargetManifold

__all__ = [
    "FIELD_MAGIC",
    "RECORD_MAGIC",
    "write_container",
    "read_container",
    "field_header",
    "save_field",
    "load_field",
    "canonical_json",
    "config_hash",
]

FIELD_MAGIC = b"DHMFLD1\n"
RECORD_MAGIC = b"DHMREC1\n"
_LEN_WIDTH = 16


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(obj):
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def _array_bytes(arr):
    arr = np.ascontiguousarray(arr)
    if np.iscomplexobj(arr):
        return "complex128", arr.astype("<c16").tobytes()
    return "float64", arr.astype("<f8").tobytes()


def write_container(path, magic, header, arrays):
    """Write ``header`` (JSON-able dict) and named ``arrays`` to ``path``."""
    header = dict(header)
    blobs = []
    specs = []
    for name, arr in arrays:
        dtype, blob = _array_bytes(arr)
        specs.append({"name": name, "shape": list(np.shape(arr)), "dtype": dtype})
        blobs.append(blob)
    header["arrays"] = specs
    text = canonical_json(header).encode()
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(f"{len(text):0{_LEN_WIDTH}d}\n".encode())
        fh.write(text)
        for blob in blobs:
            fh.write(blob)


def read_container(path, magic):
    """Inverse of :func:`write_container`; returns ``(header, {name: array})``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(magic):
        raise ConfigurationError(f"{path}: not a {magic.strip().decode()} file")
    pos = len(magic)
    try:
        length = int(data[pos:pos + _LEN_WIDTH])
    except ValueError as exc:
        raise ConfigurationError(f"{path}: corrupt header length") from exc
    pos += _LEN_WIDTH + 1
    header = json.loads(data[pos:pos + length])
    pos += length
    arrays = {}
    for spec in header["arrays"]:
        dt = np.dtype("<c16" if spec["dtype"] == "complex128" else "<f8")
        count = int(np.prod(spec["shape"], dtype=int))
        nbytes = count * dt.itemsize
        if pos + nbytes > len(data):
            raise ConfigurationError(f"{path}: truncated array {spec['name']}")
        arr = np.frombuffer(data, dtype=dt, count=count, offset=pos).reshape(spec["shape"])
        arrays[spec["name"]] = arr.astype(complex if spec["dtype"] == "complex128" else float)
        pos += nbytes
    return header, arrays


def field_header(f, target=None):
    """``(m, n, L, delta, q, kind)`` description of a map or spinor field."""
    dom = f.domain
    head = {"m": dom.dim, "n": list(dom.n), "L": list(dom.length), "q": f.q}
    if isinstance(f, MapField):
        head.update(type="map", kind=f.target.kind, delta=None,
                    winding=f.winding.tolist())
    else:
        head.update(type="spinor", kind=None if target is None else target.kind,
                    delta=list(f.spin.phases))
    return head


def field_from_header(head, values):
    dom = LatticeDomain(head["m"], head["n"], head["L"])
    if head["type"] == "map":
        return MapField(dom, TargetManifold(head["kind"], head["q"]), values,
                        np.asarray(head["winding"], dtype=int))
    return SpinorField(dom, SpinStructure(head["delta"]), values)


def save_field(path, f, target=None):
    write_container(path, FIELD_MAGIC, {"field": field_header(f, target)}, [("values", f.values)])


def load_field(path):
    header, arrays = read_container(path, FIELD_MAGIC)
    return field_from_header(header["field"], arrays["values"])
