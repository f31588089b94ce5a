"""Synthetic point-scatterer RF data and the RFB1 binary container.

RFB1 layout (little-endian, packed)::

    magic    4s   b"RFB1"
    version  u32  1
    dtype    u8   0 = int16, 1 = float32
    n_l      u32
    n_c      u32
    n_f      u32
    fs       f64
    fc       f64
    c        f64
    prf      f64
    payload  n_l * n_c * n_f samples, axial fastest, then channel, then frame
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import PipelineConfig, ProbeGeometry, RfTensor

MAGIC = b"RFB1"
VERSION = 1
HEADER = struct.Struct("<4sIB3I4d")
DTYPES = {0: np.dtype("<i2"), 1: np.dtype("<f4")}
PULSE_BANDWIDTH = 0.6


class RfFormatError(ValueError):
    pass


class BadMagicError(RfFormatError):
    pass


class UnsupportedVersionError(RfFormatError):
    pass


class UnknownDtypeError(RfFormatError):
    pass


class TruncatedPayloadError(RfFormatError):
    pass


@dataclass(frozen=True)
class Scatterer:
    x: float
    z: float
    amplitude: float = 1.0
    v_axial: float = 0.0  # m/s, positive = away from the probe

    def __post_init__(self):
        if self.z < 0:
            raise ValueError(f"scatterer depth must be >= 0, got {self.z}")


@dataclass(frozen=True)
class RfFileHeader:
    n_l: int
    n_c: int
    n_f: int
    fs: float
    fc: float
    c: float
    prf: float
    dtype_code: int = 1
    version: int = VERSION

    @property
    def dtype(self) -> np.dtype:
        return DTYPES[self.dtype_code]

    @property
    def payload_bytes(self) -> int:
        return self.n_l * self.n_c * self.n_f * self.dtype.itemsize

    def pack(self) -> bytes:
        return HEADER.pack(
            MAGIC, self.version, self.dtype_code, self.n_l, self.n_c, self.n_f, self.fs, self.fc, self.c, self.prf
        )

    @classmethod
    def from_config(cls, rf: RfTensor, cfg: PipelineConfig, dtype_code: int | None = None) -> "RfFileHeader":
        if dtype_code is None:
            dtype_code = 0 if rf.data.dtype.kind in "iu" else 1
        return cls(rf.n_l, rf.n_c, rf.n_f, cfg.fs, cfg.fc, cfg.c, cfg.prf, dtype_code)


def gaussian_pulse_params(fc: float, bandwidth: float = PULSE_BANDWIDTH) -> tuple[float, float]:
    """Envelope exponent ``a`` in ``exp(-a t**2)`` and its sigma.

    Bandwidth is the fractional width at -6 dB of the spectrum.
    """
    ref = math.pow(10.0, -6.0 / 20.0)
    a = -((math.pi * fc * bandwidth) ** 2) / (4.0 * math.log(ref))
    return a, math.sqrt(1.0 / (2.0 * a))


def synth_rf(
    scatterers: list[Scatterer],
    geom: ProbeGeometry,
    cfg: PipelineConfig,
    n_l: int,
    dtype=np.float32,
) -> RfTensor:
    """Plane-wave echoes from point scatterers, one ensemble of ``cfg.n_f`` frames.

    Each echo is a Gaussian-modulated cosine at ``fc`` (fractional bandwidth
    0.6, truncated at +/-3 sigma) centred on the two-way arrival time. Frame
    ``f`` moves every scatterer to depth ``z + v_axial * f / prf``. Samples past
    ``n_l`` are dropped. No noise, no attenuation.
    """
    n_c, n_f = geom.n_elements, cfg.n_f
    out = np.zeros((n_l, n_c, n_f), dtype=np.float64, order="F")
    if not scatterers:
        return RfTensor(out.astype(dtype, order="F"))
    a, sigma = gaussian_pulse_params(cfg.fc)
    half = int(math.ceil(3.0 * sigma * cfg.fs)) + 1
    offsets = np.arange(-half, half + 1)
    frames = np.arange(n_f)
    for s in scatterers:
        z_f = s.z + s.v_axial * frames / cfg.prf  # (n_f,)
        dx = s.x - geom.element_x  # (n_c,)
        tau = (z_f[None, :] + np.sqrt(dx[:, None] ** 2 + z_f[None, :] ** 2)) / cfg.c  # (n_c, n_f)
        centre = np.round(tau * cfg.fs).astype(np.int64)
        idx = centre[..., None] + offsets  # (n_c, n_f, W)
        t = idx / cfg.fs - tau[..., None]
        pulse = s.amplitude * np.exp(-a * t * t) * np.cos(2.0 * np.pi * cfg.fc * t)
        pulse = np.where(np.abs(t) <= 3.0 * sigma, pulse, 0.0)
        valid = (idx >= 0) & (idx < n_l)
        ci, fi, _ = np.nonzero(valid)
        np.add.at(out, (idx[valid], ci, fi), pulse[valid])
    return RfTensor(out.astype(dtype, order="F"))


def save_rf(path, rf: RfTensor, header: RfFileHeader) -> int:
    """Write ``rf`` with ``header``; returns the payload byte count."""
    if (header.n_l, header.n_c, header.n_f) != (rf.n_l, rf.n_c, rf.n_f):
        raise ValueError(f"header dims {(header.n_l, header.n_c, header.n_f)} != tensor dims {rf.data.shape}")
    if header.dtype_code not in DTYPES:
        raise UnknownDtypeError(f"unknown dtype code {header.dtype_code}")
    data = rf.data
    if header.dtype_code == 0:
        if data.dtype.kind == "f" and not np.array_equal(data, np.round(data)):
            raise ValueError("int16 payload requires integer-valued samples")
        if data.min(initial=0) < -32768 or data.max(initial=0) > 32767:
            raise ValueError("samples out of int16 range")
    payload = np.asarray(data.ravel(order="F"), dtype=header.dtype).tobytes()
    with open(path, "wb") as fh:
        fh.write(header.pack())
        fh.write(payload)
    return len(payload)


def read_header(raw: bytes) -> RfFileHeader:
    if len(raw) < HEADER.size:
        if raw[:4] != MAGIC[: len(raw[:4])]:
            raise BadMagicError(f"bad magic {raw[:4]!r}")
        raise TruncatedPayloadError(f"file shorter than the {HEADER.size}-byte header")
    magic, version, code, n_l, n_c, n_f, fs, fc, c, prf = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported RFB1 version {version}")
    if code not in DTYPES:
        raise UnknownDtypeError(f"unknown dtype code {code}")
    if min(n_l, n_c, n_f) == 0:
        raise RfFormatError("dimensions must be positive")
    return RfFileHeader(n_l, n_c, n_f, fs, fc, c, prf, code, version)


def load_rf(path) -> tuple[RfTensor, RfFileHeader]:
    raw = Path(path).read_bytes()
    header = read_header(raw)
    payload = raw[HEADER.size :]
    if len(payload) < header.payload_bytes:
        raise TruncatedPayloadError(f"payload has {len(payload)} bytes, header implies {header.payload_bytes}")
    if len(payload) > header.payload_bytes:
        raise RfFormatError(f"{len(payload) - header.payload_bytes} trailing bytes after payload")
    flat = np.frombuffer(payload, dtype=header.dtype).astype(header.dtype.newbyteorder("="))
    data = flat.reshape((header.n_l, header.n_c, header.n_f), order="F")
    return RfTensor(data), header
