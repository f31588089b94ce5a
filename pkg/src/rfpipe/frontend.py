"""RF to IQ demodulation: carrier mixing followed by a linear-phase FIR low-pass."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IqTensor, PipelineConfig, RfTensor, conv1d_same


@dataclass(frozen=True)
class FirKernel:
    taps: np.ndarray
    normalized_cutoff: float

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size % 2 == 0:
            raise ValueError(f"FIR length must be odd, got {taps.size}")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)

    def __len__(self):
        return self.taps.size


def design_lowpass_fir(normalized_cutoff: float, taps: int = 63) -> FirKernel:
    """Hamming-windowed sinc low-pass, scaled to unit DC gain.

    Args:
        normalized_cutoff: cutoff in cycles/sample, strictly inside (0, 0.5).
        taps: odd filter length, at least 3.
    """
    if not 0.0 < normalized_cutoff < 0.5:
        raise ValueError(f"normalized cutoff must lie in (0, 0.5), got {normalized_cutoff}")
    if taps < 3 or taps % 2 == 0:
        raise ValueError(f"taps must be odd and >= 3, got {taps}")
    m = np.arange(taps) - (taps - 1) / 2.0
    h = 2.0 * normalized_cutoff * np.sinc(2.0 * normalized_cutoff * m) * np.hamming(taps)
    h = h / h.sum()
    # symmetric by construction; enforce exactly against summation rounding
    h = 0.5 * (h + h[::-1])
    return FirKernel(h, normalized_cutoff)


def default_fir(cfg: PipelineConfig) -> FirKernel:
    return design_lowpass_fir(0.5 * cfg.fc / cfg.fs, cfg.fir_taps)


def mixing_table(n_l: int, fs: float, fc: float) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin columns of ``exp(-j 2 pi fc n / fs)``, phase reference at n = 0."""
    phase = 2.0 * np.pi * fc * np.arange(n_l) / fs
    return np.cos(phase).astype(np.float32), (-np.sin(phase)).astype(np.float32)


def demodulate(rf: RfTensor, cfg: PipelineConfig, fir: FirKernel, mix=None) -> IqTensor:
    """Mix each channel/frame down to baseband and low-pass it.

    No decimation: the output keeps ``n_s = n_l`` samples. ``mix`` may carry a
    precomputed :func:`mixing_table` so forward passes rebuild nothing.
    """
    if not isinstance(rf, RfTensor):
        raise ValueError("demodulate expects an RfTensor")
    if not cfg.fs > 2 * cfg.fc:
        raise ValueError("fs must exceed 2 * fc")
    if mix is None:
        mix = mixing_table(rf.n_l, cfg.fs, cfg.fc)
    cos_t, sin_t = mix
    if cos_t.shape[0] != rf.n_l:
        raise ValueError(f"mixing table has {cos_t.shape[0]} samples, RF has {rf.n_l}")
    x = np.asarray(rf.data, dtype=np.float32)
    re = conv1d_same(x * cos_t[:, None, None], fir.taps, axis=0)
    im = conv1d_same(x * sin_t[:, None, None], fir.taps, axis=0)
    return IqTensor(re, im)
