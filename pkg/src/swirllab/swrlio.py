"""SWRL1 field container and the shared JSON report schema.

Layout (little endian):

    8 bytes   magic "SWRL1\\0\\0\\0"
    u32       nr, nz, field_count
    f64       r_max, l_z, time
    per field: 16-byte name (NUL padded), nr*nz f64 row-major (r-major)

Round trips are bit exact.  Writers go through a temp file plus rename so
partially written files are never observed.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, GridMismatchError
from .fields import ScalarFieldRZ
from .grid import HalfPlaneGrid, get_grid

MAGIC = b"SWRL1\x00\x00\x00"
_HEADER = struct.Struct("<III ddd")

SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"


@dataclass
class SwrlFile:
    grid: HalfPlaneGrid
    time: float
    fields: dict[str, ScalarFieldRZ]


def _role_for(name: str) -> str:
    base = name.lower()
    if base in ("gamma", "g", "phi"):
        return base
    return "generic"


def write_fields(path, grid: HalfPlaneGrid, fields: dict[str, ScalarFieldRZ],
                 time: float = 0.0) -> None:
    for name, f in fields.items():
        if f.grid != grid:
            raise GridMismatchError(f"field {name!r} is on a different grid")
        if len(name.encode()) > 16:
            raise FormatError(f"field name {name!r} exceeds 16 bytes")
    payload = bytearray()
    payload += MAGIC
    payload += _HEADER.pack(grid.nr, grid.nz, len(fields), grid.r_max, grid.l_z, time)
    for name, f in fields.items():
        payload += name.encode().ljust(16, b"\x00")
        payload += np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    _atomic_write_bytes(path, bytes(payload))


def read_fields(path, grid: HalfPlaneGrid | None = None) -> SwrlFile:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise FormatError(f"{path}: magic mismatch")
    if len(blob) < 8 + _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    nr, nz, count, r_max, l_z, time = _HEADER.unpack_from(blob, 8)
    file_grid = get_grid(nr, nz, r_max, l_z)
    if grid is not None and grid != file_grid:
        raise GridMismatchError(
            f"{path}: file grid ({nr}x{nz}, R={r_max}, Lz={l_z}) != target grid")
    off = 8 + _HEADER.size
    rec = 16 + nr * nz * 8
    if len(blob) < off + count * rec:
        raise FormatError(f"{path}: truncated payload "
                          f"({len(blob)} bytes, need {off + count * rec})")
    fields: dict[str, ScalarFieldRZ] = {}
    for _ in range(count):
        name = blob[off:off + 16].rstrip(b"\x00").decode()
        off += 16
        vals = np.frombuffer(blob[off:off + nr * nz * 8], dtype="<f8").reshape(nr, nz)
        off += nr * nz * 8
        fields[name] = ScalarFieldRZ(file_grid, vals.copy(), role_tag=_role_for(name))
    return SwrlFile(grid=file_grid, time=time, fields=fields)


# ---------------------------------------------------------------------------
# shared JSON report schema: {tool, version, schema, inputs, checks: [...]}
# ---------------------------------------------------------------------------


def make_check(name: str, value, bound, passed, **extra) -> dict:
    rec = {"name": name, "value": _jsonable(value), "bound": _jsonable(bound),
           "pass": bool(passed)}
    rec.update({k: _jsonable(v) for k, v in extra.items()})
    return rec


def make_report(tool: str, inputs: dict, checks: list[dict], **extra) -> dict:
    rep = {"tool": tool, "version": TOOL_VERSION, "schema": SCHEMA_VERSION,
           "inputs": _jsonable(inputs), "checks": checks}
    rep.update({k: _jsonable(v) for k, v in extra.items()})
    return rep


def validate_report(obj: dict) -> None:
    for key in ("tool", "version", "schema", "inputs", "checks"):
        if key not in obj:
            raise FormatError(f"report missing key {key!r}")
    if obj["schema"] != SCHEMA_VERSION:
        raise FormatError(f"schema version mismatch: {obj['schema']} != {SCHEMA_VERSION}")
    for chk in obj["checks"]:
        for key in ("name", "value", "bound", "pass"):
            if key not in chk:
                raise FormatError(f"check record missing key {key!r}")


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _atomic_write_bytes(path, blob: bytes) -> None:
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".swrl-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    _atomic_write_bytes(path, json.dumps(_jsonable(obj), indent=2).encode())


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_csv(path, header: list[str], rows) -> None:
    import io

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for row in rows:
        w.writerow([_jsonable(v) for v in row])
    _atomic_write_bytes(path, buf.getvalue().encode())
