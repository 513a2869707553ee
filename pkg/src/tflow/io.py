"""CSV time series and binary field snapshots.

Snapshot layout, all little-endian::

    b"TFLOW1\\0\\0"                 magic, 8 bytes
    u32 n, u32 field count, f64 t
    per field: u16 name length, name (utf-8), n*n f64 point values, row-major

Point values are ``data[i1, i2] = v(i1 / n, i2 / n)``.
"""

from __future__ import annotations

import csv
import io
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import TflowError
from .observables import CSV_COLUMNS
from .spectral import ScalarField, VectorField, make_grid
from .state import FlowState

MAGIC = b"TFLOW1\0\0"
_HEADER = struct.Struct("<IId")
_NAME_LEN = struct.Struct("<H")
STATE_FIELDS = ("u1", "u2", "phi", "theta")


class SnapshotFormatError(TflowError, ValueError):
    """A snapshot file does not follow the binary layout."""


def _format(x):
    # repr gives the shortest round-tripping decimal and never depends on locale
    return repr(float(x))


def series_text(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        w.writerow([_format(x) for x in rec.csv_row()])
    return buf.getvalue()


def write_series(records, path):
    """Write the observable records as CSV; returns the path."""
    text = series_text(records)
    try:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write series to {os.fspath(path)!r}: {exc.strerror}") from exc
    return path


def read_series(path):
    """Read a series CSV back into a dict of float columns."""
    with open(path, encoding="ascii", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


@dataclass(frozen=True)
class Snapshot:
    """Named physical-space fields on an ``n x n`` grid at time ``t``."""

    n: int
    t: float
    fields: dict

    def __post_init__(self):
        fields = {}
        for name, values in self.fields.items():
            arr = np.ascontiguousarray(values, dtype="<f8")
            if arr.shape != (self.n, self.n):
                raise SnapshotFormatError(f"field {name!r} has shape {arr.shape}, expected {(self.n, self.n)}")
            fields[str(name)] = arr
        object.__setattr__(self, "fields", fields)

    @classmethod
    def from_state(cls, state):
        u = state.u.values
        values = dict(zip(STATE_FIELDS, (u[0], u[1], state.phi.values, state.theta.values)))
        return cls(state.grid.n, float(state.t), values)

    def to_state(self, potential):
        """Rebuild a :class:`FlowState`; the velocity is re-projected and ``mu`` recomputed."""
        missing = [f for f in STATE_FIELDS if f not in self.fields]
        if missing:
            raise SnapshotFormatError(f"snapshot lacks fields {missing}")
        g = make_grid(self.n)
        f = self.fields
        u = VectorField.from_physical(g, (f["u1"], f["u2"]))
        return FlowState.build(
            u, ScalarField.from_physical(g, f["phi"]), ScalarField.from_physical(g, f["theta"]),
            potential, t=self.t,
        )

    def to_bytes(self):
        parts = [MAGIC, _HEADER.pack(self.n, len(self.fields), self.t)]
        for name, arr in self.fields.items():
            raw = name.encode("utf-8")
            parts += [_NAME_LEN.pack(len(raw)), raw, arr.tobytes(order="C")]
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data):
        if data[:8] != MAGIC:
            raise SnapshotFormatError("bad magic bytes")
        pos = 8
        try:
            n, count, t = _HEADER.unpack_from(data, pos)
            pos += _HEADER.size
            block = 8 * n * n
            fields = {}
            for _ in range(count):
                (length,) = _NAME_LEN.unpack_from(data, pos)
                pos += _NAME_LEN.size
                name = data[pos:pos + length].decode("utf-8")
                pos += length
                if pos + block > len(data):
                    raise SnapshotFormatError(f"field {name!r} is truncated")
                fields[name] = np.frombuffer(data, dtype="<f8", count=n * n, offset=pos).reshape(n, n)
                pos += block
        except struct.error as exc:
            raise SnapshotFormatError(f"truncated header: {exc}") from exc
        if pos != len(data):
            raise SnapshotFormatError(f"{len(data) - pos} trailing bytes")
        return cls(n, t, fields)

    def equals(self, other):
        """Bit-exact comparison of time, names and every value."""
        return (
            self.n == other.n
            and struct.pack("<d", self.t) == struct.pack("<d", other.t)
            and list(self.fields) == list(other.fields)
            and all(a.tobytes() == other.fields[k].tobytes() for k, a in self.fields.items())
        )


def write_snapshot(snapshot, path):
    if isinstance(snapshot, FlowState):
        snapshot = Snapshot.from_state(snapshot)
    try:
        with open(path, "wb") as fh:
            fh.write(snapshot.to_bytes())
    except OSError as exc:
        raise OSError(f"cannot write snapshot to {os.fspath(path)!r}: {exc.strerror}") from exc
    return path


def read_snapshot(path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read snapshot {os.fspath(path)!r}: {exc.strerror}") from exc
    try:
        return Snapshot.from_bytes(data)
    except SnapshotFormatError as exc:
        raise SnapshotFormatError(f"{os.fspath(path)}: {exc}") from exc
