"""Binary shot-file format.

Little-endian layout::

    header   magic b"RASE" | version u16 | sample_rate_hz f64 | n_samples u32
             | n_shots u32 | flags u16                              (24 bytes)
    per shot shot_id u32 | rng_seed u64 | [theta f64 | delta f64]
             | n_samples x (I f32, Q f32)

``flags`` bit 0: truth block present. Bit 1: pi-pulse intervals were zeroed.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import ShotRecord, Truth

MAGIC = b"RASE"
VERSION = 1
FLAG_TRUTH = 0x1
FLAG_BLANKED = 0x2

_HEADER = struct.Struct("<4sHdIIH")
_SHOT = struct.Struct("<IQ")
_TRUTH = struct.Struct("<dd")

HEADER_SIZE = _HEADER.size


class ShotFileError(ValueError):
    pass


def shot_size(n_samples: int, truth: bool) -> int:
    return _SHOT.size + (_TRUTH.size if truth else 0) + 8 * n_samples


def file_size(n_shots: int, n_samples: int, truth: bool) -> int:
    return HEADER_SIZE + n_shots * shot_size(n_samples, truth)


class ShotWriter:
    """Streaming writer; the shot count is fixed up front."""

    def __init__(self, path, sample_rate_hz, n_samples, n_shots, truth=True, blanked=True):
        self.path = Path(path)
        self.sample_rate_hz = float(sample_rate_hz)
        self.n_samples = int(n_samples)
        self.n_shots = int(n_shots)
        self.truth = bool(truth)
        self._written = 0
        flags = (FLAG_TRUTH if truth else 0) | (FLAG_BLANKED if blanked else 0)
        self._fh = open(self.path, "wb")
        self._fh.write(
            _HEADER.pack(MAGIC, VERSION, self.sample_rate_hz, self.n_samples, self.n_shots, flags)
        )

    def write(self, rec: ShotRecord):
        if self._written >= self.n_shots:
            raise ShotFileError("more shots than declared in the header")
        if rec.sample_rate_hz != self.sample_rate_hz or rec.n_samples != self.n_samples:
            raise ShotFileError("all records must share sample rate and length")
        samples = np.asarray(rec.samples)
        if not np.all(np.isfinite(samples)):
            raise ShotFileError(f"shot {rec.shot_id} contains NaN/inf samples")
        if self.truth and rec.truth is None:
            raise ShotFileError("file declares a truth block but record has none")
        self._fh.write(_SHOT.pack(rec.shot_id, rec.rng_seed))
        if self.truth:
            self._fh.write(_TRUTH.pack(rec.truth.theta_rad, rec.truth.delta_s))
        self._fh.write(samples.astype("<c8", copy=False).tobytes())
        self._written += 1

    def close(self):
        if self._fh.closed:
            return
        self._fh.close()
        if self._written != self.n_shots:
            raise ShotFileError(f"declared {self.n_shots} shots, wrote {self._written}")

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self._fh.close()


def write_shots(path, records: Sequence[ShotRecord], sample_rate_hz=None, n_samples=None):
    """Write ``records`` to ``path``.

    For an empty list the sample rate and length must be given explicitly
    (they default to 0).
    """
    records = list(records)
    if records:
        sample_rate_hz = records[0].sample_rate_hz
        n_samples = records[0].n_samples
        truth = records[0].truth is not None
    else:
        sample_rate_hz = sample_rate_hz or 0.0
        n_samples = n_samples or 0
        truth = False
    with ShotWriter(path, sample_rate_hz, n_samples, len(records), truth=truth) as w:
        for rec in records:
            w.write(rec)


def iter_shots(path) -> Iterable[ShotRecord]:
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
        if len(head) < HEADER_SIZE:
            raise ShotFileError("truncated header")
        magic, version, rate, n_samples, n_shots, flags = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ShotFileError(f"bad magic {magic!r}")
        if version != VERSION:
            raise ShotFileError(f"unsupported version {version} (expected {VERSION})")
        truth = bool(flags & FLAG_TRUTH)
        payload = 8 * n_samples
        for _ in range(n_shots):
            buf = fh.read(_SHOT.size)
            if len(buf) < _SHOT.size:
                raise ShotFileError("truncated file")
            shot_id, seed = _SHOT.unpack(buf)
            tr = None
            if truth:
                buf = fh.read(_TRUTH.size)
                if len(buf) < _TRUTH.size:
                    raise ShotFileError("truncated file")
                tr = Truth(*_TRUTH.unpack(buf))
            raw = fh.read(payload)
            if len(raw) < payload:
                raise ShotFileError("truncated file")
            samples = np.frombuffer(raw, dtype="<c8").astype(np.complex64)
            yield ShotRecord(samples, rate, shot_id, seed, tr)
        if fh.read(1):
            raise ShotFileError("trailing bytes after last shot")


def read_shots(path) -> list[ShotRecord]:
    return list(iter_shots(path))


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
    if len(head) < HEADER_SIZE:
        raise ShotFileError("truncated header")
    magic, version, rate, n_samples, n_shots, flags = _HEADER.unpack(head)
    if magic != MAGIC:
        raise ShotFileError(f"bad magic {magic!r}")
    return dict(version=version, sample_rate_hz=rate, n_samples=n_samples,
                n_shots=n_shots, flags=flags)
