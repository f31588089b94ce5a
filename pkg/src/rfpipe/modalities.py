"""Image-domain estimators on beamformed IQ, plus PGM / raw float32 export.

Beamformed input is an :class:`IqTensor` of shape ``(nz * nx, 1, n_f)``; images
come back as ``(n_f, nz, nx)`` stacks for B-mode and ``(nz, nx)`` otherwise.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .core import IqTensor, PipelineConfig, atan2_phase, box_kernel, conv2d_same

LOG_FLOOR = 1e-12


def _frames(iq_bf: IqTensor, shape: tuple[int, int]) -> np.ndarray:
    nz, nx = shape
    if iq_bf.n_s != nz * nx or iq_bf.n_c != 1:
        raise ValueError(f"beamformed IQ shape {iq_bf.shape} does not match a {nz}x{nx} grid")
    z = iq_bf.to_complex()[:, 0, :]
    return np.moveaxis(z.reshape(nz, nx, iq_bf.n_f), -1, 0)


def bmode(iq_bf: IqTensor, shape: tuple[int, int], dynamic_range_db: float = 60.0) -> np.ndarray:
    """Log-compressed envelope, one image per frame, mapped to [0, 1].

    Each frame is normalised by its own maximum, so an all-zero frame maps to
    zeros through the log floor.
    """
    if not dynamic_range_db > 0:
        raise ValueError("dynamic_range_db must be positive")
    env = np.abs(_frames(iq_bf, shape))
    peak = env.max(axis=(1, 2), keepdims=True)
    ratio = np.divide(env, peak, out=np.zeros_like(env), where=peak > 0)
    env_db = 20.0 * np.log10(ratio + LOG_FLOOR)
    env_db = np.clip(env_db, -dynamic_range_db, 0.0)
    return ((env_db + dynamic_range_db) / dynamic_range_db).astype(np.float32)


def lag1_autocorrelation(frames: np.ndarray) -> np.ndarray:
    """``sum_f conj(x_f) * x_{f+1}`` over the leading (frame) axis."""
    return np.sum(np.conj(frames[:-1]) * frames[1:], axis=0)


def kasai_scale(cfg: PipelineConfig) -> float:
    return cfg.c * cfg.prf / (4.0 * math.pi * cfg.fc)


def color_doppler(iq_bf: IqTensor, shape: tuple[int, int], cfg: PipelineConfig) -> np.ndarray:
    """Axial velocity (m/s) from the phase of the smoothed lag-1 autocorrelation.

    Phase advancing from frame to frame gives positive velocity.
    """
    if iq_bf.n_f < 2:
        raise ValueError(f"color Doppler needs n_f >= 2, got {iq_bf.n_f}")
    r1 = lag1_autocorrelation(_frames(iq_bf, shape))
    k = box_kernel(cfg.smoothing_kernel)
    re = conv2d_same(r1.real, k)
    im = conv2d_same(r1.imag, k)
    v = kasai_scale(cfg) * atan2_phase(im, re)
    return np.asarray(v, dtype=np.float32)


def power_doppler(iq_bf: IqTensor, shape: tuple[int, int], cfg: PipelineConfig | None = None) -> np.ndarray:
    """Accumulated power over the ensemble in dB, floored at 10*log10(1e-12)."""
    z = _frames(iq_bf, shape)
    p = np.sum(z.real * z.real + z.imag * z.imag, axis=0)
    return (10.0 * np.log10(np.maximum(p, LOG_FLOOR))).astype(np.float32)


def write_pgm(path, image: np.ndarray, lo: float | None = None, hi: float | None = None) -> None:
    """Binary (P5) 8-bit graymap; values mapped linearly from [lo, hi] to [0, 255]."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"PGM export needs a 2-D image, got shape {img.shape}")
    lo = float(img.min()) if lo is None else lo
    hi = float(img.max()) if hi is None else hi
    span = hi - lo
    scaled = np.zeros_like(img) if span <= 0 else (img - lo) / span
    pix = np.round(np.clip(scaled, 0.0, 1.0) * 255.0).astype(np.uint8)
    nz, nx = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {nz}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if m is None:
        raise ValueError("not a binary PGM file")
    nx, nz, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise ValueError("only 8-bit PGM is supported")
    return np.frombuffer(raw[m.end() : m.end() + nx * nz], dtype=np.uint8).reshape(nz, nx)


def write_raw(path, image: np.ndarray) -> None:
    """Row-major little-endian float32 dump."""
    np.ascontiguousarray(image, dtype="<f4").tofile(path)


def read_raw(path, shape) -> np.ndarray:
    return np.fromfile(path, dtype="<f4").reshape(shape)
