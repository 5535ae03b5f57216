"""File formats: RepTable/AuditTable binaries and CSV, deterministic CSV/JSON reports, run manifests.

Byte layouts are documented in docs/formats.md.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import struct
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .core_arith import RepParams, RepTable

MAGIC = b"WLRT"
VERSION_REPS = 1
VERSION_AUDIT = 2


def fmt_float(x: float) -> str:
    return format(float(x), ".12g")


def _encode_varints(values) -> bytes:
    out = bytearray()
    for v in values:
        v = int(v)
        if v < 0:
            raise ValueError("counts must be nonnegative")
        while v >= 0x80:
            out.append((v & 0x7F) | 0x80)
            v >>= 7
        out.append(v)
    return bytes(out)


def _decode_varints(buf: bytes, count: int, pos: int) -> tuple[list[int], int]:
    vals = []
    for _ in range(count):
        v, shift = 0, 0
        while True:
            if pos >= len(buf):
                raise ValueError("truncated varint stream")
            b = buf[pos]
            pos += 1
            v |= (b & 0x7F) << shift
            if b < 0x80:
                break
            shift += 7
        vals.append(v)
    return vals, pos


def _counts_array(vals: list[int]) -> np.ndarray:
    if vals and max(vals) > 2**63 - 1:
        return np.array(vals, dtype=object)
    return np.array(vals, dtype=np.int64)


def _write_bytes(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def rep_table_bytes(table: RepTable) -> bytes:
    p = table.params
    return MAGIC + struct.pack("<IQQQ", VERSION_REPS, p.s, p.k, p.N) + _encode_varints(table.counts)


def write_rep_binary(table: RepTable, path) -> None:
    _write_bytes(path, rep_table_bytes(table))


def _parse_header(buf: bytes, path):
    if buf[:4] != MAGIC:
        raise ValueError(f"{path}: not a waringlab table (bad magic)")
    version, s, k, N = struct.unpack_from("<IQQQ", buf, 4)
    return version, RepParams(s, k, N), 4 + struct.calcsize("<IQQQ")


def read_rep_binary(path) -> RepTable:
    buf = _read_bytes(path)
    version, params, pos = _parse_header(buf, path)
    if version not in (VERSION_REPS, VERSION_AUDIT):
        raise ValueError(f"{path}: unsupported version {version}")
    vals, _ = _decode_varints(buf, params.N + 1, pos)
    return RepTable(params, _counts_array(vals))


def rep_table_csv(table: RepTable) -> str:
    lines = ["n,count"]
    lines += [f"{n},{int(c)}" for n, c in enumerate(table.counts) if n >= 1]
    return "\n".join(lines) + "\n"


def write_rep_csv(table: RepTable, path) -> None:
    _write_bytes(path, rep_table_csv(table).encode())


def read_rep_csv(path, s: int, k: int) -> RepTable:
    rows = list(csv.reader(io.StringIO(_read_bytes(path).decode())))
    if not rows or rows[0] != ["n", "count"]:
        raise ValueError(f"{path}: expected header n,count")
    N = len(rows) - 1
    vals = [0] * (N + 1)
    for i, (n, c) in enumerate(rows[1:], start=1):
        if int(n) != i:
            raise ValueError(f"{path}: row {i} has n={n}")
        vals[i] = int(c)
    return RepTable(RepParams(s, k, N), _counts_array(vals))


def load_reps(path, s: int | None = None, k: int | None = None) -> RepTable:
    if str(path).endswith(".csv"):
        if s is None or k is None:
            raise ValueError("loading a CSV table needs s and k")
        return read_rep_csv(path, s, k)
    return read_rep_binary(path)


def audit_bytes(audit) -> bytes:
    p = audit.params
    head = MAGIC + struct.pack("<IQQQ", VERSION_AUDIT, p.s, p.k, p.N) + _encode_varints(audit.R)
    tail = struct.pack("<Q", audit.seriesQ)
    for arr in (audit.series, audit.tail, audit.main, audit.E):
        tail += np.asarray(arr, dtype="<f8").tobytes()
    return head + tail


def write_audit_binary(audit, path) -> None:
    _write_bytes(path, audit_bytes(audit))


def read_audit_binary(path):
    from .exceptional_audit import AuditTable

    buf = _read_bytes(path)
    version, params, pos = _parse_header(buf, path)
    if version != VERSION_AUDIT:
        raise ValueError(f"{path}: version {version} is not an audit table")
    vals, pos = _decode_varints(buf, params.N + 1, pos)
    (seriesQ,) = struct.unpack_from("<Q", buf, pos)
    pos += 8
    arrays = []
    for _ in range(4):
        arrays.append(np.frombuffer(buf, dtype="<f8", count=params.N + 1, offset=pos).astype(np.float64))
        pos += 8 * (params.N + 1)
    return AuditTable(params, int(seriesQ), _counts_array(vals), *arrays)


def audit_csv(audit) -> str:
    lines = ["n,R,series,mainTerm,E"]
    for n in range(1, audit.N + 1):
        lines.append(
            f"{n},{int(audit.R[n])},{fmt_float(audit.series[n])},{fmt_float(audit.main[n])},{fmt_float(audit.E[n])}"
        )
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (tuple, list)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(fmt_float(x)) if math.isfinite(x) else None
    if isinstance(x, Fraction):
        return str(x)
    return x


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, ensure_ascii=False) + "\n"


def emit_report(report, fmt: str, path) -> None:
    """Write a report as CSV (header + rows) or JSON.

    ``report`` is either an object with ``to_dict``/``csv_rows`` or a
    ``(header, rows)`` pair for CSV / plain dict for JSON.
    """
    if fmt == "csv":
        header, rows = report.csv_rows() if hasattr(report, "csv_rows") else report
        text = csv_text(header, rows)
    elif fmt == "json":
        text = json_text(report.to_dict() if hasattr(report, "to_dict") else report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    _write_bytes(path, text.encode())


def sha256_file(path) -> str:
    return hashlib.sha256(_read_bytes(path)).hexdigest()


def manifest(command: str, params: dict, inputs=()) -> dict:
    return {
        "tool": "waringlab",
        "version": __version__,
        "command": command,
        "params": _jsonable(dict(sorted(params.items()))),
        "inputs": [sha256_file(p) for p in inputs],
    }


def write_manifest(out_path, command: str, params: dict, inputs=()) -> Path:
    path = Path(str(out_path) + ".manifest.json")
    _write_bytes(path, (json.dumps(manifest(command, params, inputs), indent=2, sort_keys=True) + "\n").encode())
    return path
