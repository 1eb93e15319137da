"""Field files, raw signals, pyramid directories and reports.

Field file layout: ``b"OPWF"``, a little-endian uint32 header length, the
UTF-8 JSON header, then the row-major little-endian payload.
"""

import json
import math
import os
import struct
from dataclasses import asdict, is_dataclass

import numpy as np

from .band import SignalField
from .errors import FormatError
from .lattice import frequency_grid, parse_dilation
from .splines import SpectralField

MAGIC = b"OPWF"
FORMAT_VERSION = 1
SUPPORTED_VERSIONS = (1,)
_DTYPES = {"f64": np.dtype("<f8"), "c128": np.dtype("<c16")}


def _header_for(f):
    if isinstance(f, SignalField):
        return {"kind": "signal", "dtype": "f64", "shape": list(f.values.shape),
                "spacing": float(f.h), "scale": f.meta.get("scale"),
                "dilation": f.meta.get("dilation"), "operator": f.meta.get("operator")}
    if isinstance(f, SpectralField):
        g = f.grid
        return {"kind": "spectral", "dtype": "c128", "shape": list(np.shape(f.values)),
                "scale": int(g.j), "dilation": g.D.label(), "operator": None, "tag": f.tag,
                "grid_N": int(g.N), "use_offset": bool(g.use_offset)}
    raise TypeError(f"cannot write {type(f).__name__}")


def write_field(f, path, operator=None):
    header = _header_for(f)
    if operator is not None:
        header["operator"] = operator
    header.update(format_version=FORMAT_VERSION, byte_order="little")
    arr = np.ascontiguousarray(f.values, dtype=_DTYPES[header["dtype"]])
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(arr.tobytes(order="C"))


def read_field(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise FormatError("not a field file (bad magic)", 0)
    if len(data) < 8:
        raise FormatError("truncated header length", len(data))
    (hlen,) = struct.unpack("<I", data[4:8])
    if 8 + hlen > len(data):
        raise FormatError(f"header of {hlen} bytes runs past end of file", 4)
    try:
        header = json.loads(data[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"header is not JSON: {exc}", 8) from None
    version = header.get("format_version")
    if version not in SUPPORTED_VERSIONS:
        raise FormatError(f"format_version {version!r} not supported "
                          f"(supported: {list(SUPPORTED_VERSIONS)})", 8)
    dtype = _DTYPES.get(header.get("dtype"))
    if dtype is None or header.get("byte_order") != "little":
        raise FormatError(f"unsupported dtype/byte order in header", 8)
    shape = tuple(int(s) for s in header["shape"])
    start = 8 + hlen
    want = int(np.prod(shape)) * dtype.itemsize
    if len(data) - start != want:
        raise FormatError(f"payload has {len(data) - start} bytes, expected {want}",
                          start + min(want, len(data) - start))
    values = np.frombuffer(data, dtype=dtype, offset=start).reshape(shape).copy()
    if header["kind"] == "signal":
        meta = {k: header[k] for k in ("scale", "dilation", "operator") if header.get(k)}
        return SignalField(values, float(header["spacing"]), meta)
    if header["kind"] == "spectral":
        D = parse_dilation(header["dilation"])
        grid = frequency_grid(D, header["scale"], header["grid_N"], header["use_offset"])
        return SpectralField(values.reshape(grid.shape), grid, header.get("tag", ""))
    raise FormatError(f"unknown kind {header['kind']!r}", 8)


# --- raw signals -------------------------------------------------------------

def sidecar_path(path):
    return str(path) + ".json"


def write_signal(sig, path):
    """Raw little-endian float64 payload plus a ``<path>.json`` sidecar."""
    np.ascontiguousarray(sig.values, dtype="<f8").tofile(path)
    side = {"shape": list(sig.values.shape), "extent": sig.extent, "dtype": "float64"}
    with open(sidecar_path(path), "w") as fh:
        fh.write(dumps(side))


def read_signal(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        with open(sidecar_path(path)) as fh:
            side = json.load(fh)
        shape = tuple(int(s) for s in side["shape"])
        extent = float(side["extent"])
    except FileNotFoundError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"bad sidecar: {exc}", 0) from None
    if side.get("dtype", "float64") != "float64":
        raise FormatError(f"unsupported dtype {side.get('dtype')!r}", 0)
    raw = np.fromfile(path, dtype="<f8")
    if raw.size != int(np.prod(shape)):
        raise FormatError(f"payload has {raw.size} values, sidecar says {shape}",
                          min(raw.size, int(np.prod(shape))) * 8)
    return SignalField(raw.reshape(shape).astype(float), extent / shape[0])


# --- pyramids ----------------------------------------------------------------

def write_pyramid(p, directory):
    os.makedirs(directory, exist_ok=True)
    entries = []
    for j, m in p.keys():
        name = f"c_j{j}_m{m}"
        np.ascontiguousarray(p.coeffs[(j, m)], dtype="<f8").tofile(
            os.path.join(directory, name + ".bin"))
        np.ascontiguousarray(p.positions[(j, m)], dtype="<i8").tofile(
            os.path.join(directory, name + ".pos"))
        entries.append({"scale": j, "coset": m, "file": name + ".bin",
                        "positions": name + ".pos", "count": int(p.coeffs[(j, m)].size)})
    np.ascontiguousarray(p.coarse, dtype="<f8").tofile(os.path.join(directory, "coarse.bin"))
    np.ascontiguousarray(p.coarse_positions, dtype="<i8").tofile(
        os.path.join(directory, "coarse.pos"))
    manifest = {"format_version": FORMAT_VERSION, "shape": list(p.shape), "spacing": p.h,
                "j_min": p.j_min, "j_max": p.j_max, "provenance": p.provenance,
                "entries": entries,
                "coarse": {"file": "coarse.bin", "positions": "coarse.pos",
                           "count": int(p.coarse.size)}}
    write_report(manifest, os.path.join(directory, "manifest.json"))


def read_pyramid(directory):
    from .transform import Pyramid

    path = os.path.join(directory, "manifest.json")
    with open(path) as fh:
        try:
            man = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad manifest: {exc.msg}", exc.pos) from None
    if man.get("format_version") not in SUPPORTED_VERSIONS:
        raise FormatError(f"format_version {man.get('format_version')!r} not supported "
                          f"(supported: {list(SUPPORTED_VERSIONS)})", 0)

    def load(name, dtype, count):
        arr = np.fromfile(os.path.join(directory, name), dtype=dtype)
        if arr.size != count:
            raise FormatError(f"{name}: {arr.size} entries, manifest says {count}",
                              min(arr.size, count) * arr.itemsize)
        return arr.astype(np.int64 if dtype == "<i8" else float)

    coeffs, positions = {}, {}
    for e in man["entries"]:
        key = (int(e["scale"]), int(e["coset"]))
        coeffs[key] = load(e["file"], "<f8", e["count"])
        positions[key] = load(e["positions"], "<i8", e["count"])
    c = man["coarse"]
    return Pyramid(coeffs, load(c["file"], "<f8", c["count"]), positions,
                   load(c["positions"], "<i8", c["count"]), tuple(man["shape"]),
                   float(man["spacing"]), int(man["j_min"]), int(man["j_max"]),
                   man.get("provenance", {}))


# --- reports -----------------------------------------------------------------

def _plain(obj):
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(obj.to_dict() if hasattr(obj, "to_dict") else asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def _fmt_float(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _emit(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_emit(obj[k], indent, level + 1)}"
                 for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_emit(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _emit(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj)


def dumps(report, indent=2):
    """Deterministic JSON: sorted keys, floats with 17 significant digits."""
    return _emit(_plain(report), indent, 0) + "\n"


def write_report(report, path, format=None):
    """Write ``report`` as JSON or as a CSV series with header ``n,value``.

    CSV input is a sequence of values (indexed from 1) or of ``(n, value)``
    pairs; complex values are written as their real part.
    """
    fmt = format or ("csv" if str(path).endswith(".csv") else "json")
    if fmt == "json":
        text = dumps(report)
    elif fmt == "csv":
        rows = []
        for i, item in enumerate(report, start=1):
            n, v = item if isinstance(item, (tuple, list)) else (i, item)
            rows.append(f"{int(n)},{_fmt_float(float(np.real(v)))}")
        text = "n,value\n" + "\n".join(rows) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
