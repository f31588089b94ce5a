"""Delay-and-sum image formation in three operator formulations.

All three variants consume tables derived from one :class:`DelayTable` and
share the same arithmetic per (pixel, channel):

1. two-tap linear interpolation of the channel's IQ trace at the fractional
   delay, with weights ``apod * (1 - frac)`` and ``apod * frac`` (float32),
2. an optional baseband phase rotation ``exp(+j * phase)``,
3. accumulation over receive channels in ascending channel order.

Only the way step 1 is expressed differs: an explicit gather, a CSR
sparse-matrix product, or a dense matrix product (a 1x1 convolution over the
axial axis). Beamformed output is an :class:`IqTensor` of shape
``(n_pixels, 1, n_f)`` with pixel index ``iz * nx + ix``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Apodization, ImageGrid, IqTensor, PipelineConfig, ProbeGeometry


@dataclass(frozen=True)
class DelayTable:
    delay_samples: np.ndarray  # (n_pixels, n_c) float64
    apod: np.ndarray  # (n_pixels, n_c) float64 in [0, 1]
    n_s: int
    phase: np.ndarray | None = None  # (n_pixels, n_c) radians, None = no rotation

    def __post_init__(self):
        delay = np.atleast_2d(np.asarray(self.delay_samples, dtype=np.float64))
        apod = np.atleast_2d(np.asarray(self.apod, dtype=np.float64))
        if delay.shape != apod.shape:
            raise ValueError(f"delay {delay.shape} and apod {apod.shape} shapes differ")
        if np.any(apod < 0) or np.any(apod > 1):
            raise ValueError("apodization weights must lie in [0, 1]")
        active = apod > 0
        if np.any(~np.isfinite(delay[active])) or np.any(delay[active] < 0) or np.any(delay[active] > self.n_s - 2):
            raise ValueError(f"active delays must lie in [0, n_s - 2] = [0, {self.n_s - 2}]")
        object.__setattr__(self, "delay_samples", delay)
        object.__setattr__(self, "apod", apod)
        if self.phase is not None:
            phase = np.asarray(self.phase, dtype=np.float64).reshape(delay.shape)
            object.__setattr__(self, "phase", phase)

    @property
    def n_pixels(self) -> int:
        return self.delay_samples.shape[0]

    @property
    def n_c(self) -> int:
        return self.delay_samples.shape[1]

    def taps(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Base index ``k`` and float32 tap weights for every (pixel, channel).

        Inactive entries get ``k = 0`` and zero weights; indices are never clamped
        for active entries.
        """
        active = self.apod > 0
        d = np.where(active, self.delay_samples, 0.0)
        k = np.floor(d).astype(np.int64)
        frac = d - k
        w0 = (self.apod * (1.0 - frac)).astype(np.float32)
        w1 = (self.apod * frac).astype(np.float32)
        return k, w0, w1

    def rotation(self) -> tuple[np.ndarray, np.ndarray] | None:
        if self.phase is None:
            return None
        return np.cos(self.phase).astype(np.float32), np.sin(self.phase).astype(np.float32)

    @property
    def nbytes(self) -> int:
        n = self.delay_samples.nbytes + self.apod.nbytes
        return n + (self.phase.nbytes if self.phase is not None else 0)


def compute_delay_table(
    geom: ProbeGeometry,
    grid: ImageGrid,
    cfg: PipelineConfig,
    n_s: int,
    phase_rotation: bool = True,
) -> DelayTable:
    """Two-way delays for a zero-angle plane-wave transmit.

    For pixel (x, z) and element x_e the round trip is
    ``tau = (z + sqrt((x - x_e)**2 + z**2)) / c``, expressed in samples at
    ``cfg.fs``. Entries whose delay leaves ``[0, n_s - 2]`` get zero
    apodization. With ``phase_rotation`` the table also carries
    ``2 pi fc tau``, which re-aligns the carrier phase removed by
    demodulation so channels add coherently.
    """
    px, pz = grid.pixel_coords()
    dx = px[:, None] - geom.element_x[None, :]
    tau = (pz[:, None] + np.sqrt(dx * dx + pz[:, None] ** 2)) / cfg.c
    delay = tau * cfg.fs
    if cfg.apodization is Apodization.HANN:
        u = dx / geom.aperture
        apod = np.where(np.abs(u) <= 0.5, np.cos(np.pi * u) ** 2, 0.0)
    else:
        apod = np.ones_like(delay)
    apod = np.where((delay >= 0) & (delay <= n_s - 2), apod, 0.0)
    phase = 2.0 * np.pi * cfg.fc * tau if phase_rotation else None
    return DelayTable(delay, apod, n_s, phase)


def check_iq(iq: IqTensor, n_s: int, n_c: int):
    if iq.n_s != n_s or iq.n_c != n_c:
        raise ValueError(f"IQ has (n_s, n_c) = ({iq.n_s}, {iq.n_c}); tables expect ({n_s}, {n_c})")


def _accumulate(out_re, out_im, yr, yi, rot, c):
    if rot is None:
        out_re += yr
        out_im += yi
    else:
        cs, sn = rot[0][:, c, None], rot[1][:, c, None]
        out_re += cs * yr - sn * yi
        out_im += sn * yr + cs * yi


def das_gather(iq: IqTensor, table: DelayTable) -> IqTensor:
    """Beamform by indexing each channel trace at ``k`` and ``k + 1``."""
    check_iq(iq, table.n_s, table.n_c)
    k, w0, w1 = table.taps()
    return gather_apply(iq, k, w0, w1, table.rotation())


def gather_apply(iq, k, w0, w1, rot) -> IqTensor:
    n_pix, n_f = k.shape[0], iq.n_f
    out_re = np.zeros((n_pix, n_f), dtype=np.float32)
    out_im = np.zeros((n_pix, n_f), dtype=np.float32)
    for c in range(k.shape[1]):
        kc = k[:, c]
        a0, a1 = w0[:, c, None], w1[:, c, None]
        yr = a0 * iq.re[kc, c, :] + a1 * iq.re[kc + 1, c, :]
        yi = a0 * iq.im[kc, c, :] + a1 * iq.im[kc + 1, c, :]
        _accumulate(out_re, out_im, yr, yi, rot, c)
    return IqTensor(out_re[:, None, :], out_im[:, None, :])


@dataclass(frozen=True)
class CsrMatrix:
    """Compressed-row matrix: ``indptr`` (n_rows + 1), ``indices``, ``data``."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple[int, int]

    def __post_init__(self):
        if self.indptr.shape != (self.shape[0] + 1,) or self.indptr[0] != 0:
            raise ValueError("indptr must have n_rows + 1 entries starting at 0")
        if self.indices.shape != self.data.shape or self.indptr[-1] != self.data.size:
            raise ValueError("indices/data length must equal indptr[-1]")
        if self.data.size and (self.indices.min() < 0 or self.indices.max() >= self.shape[1]):
            raise ValueError("column index out of range")

    @property
    def nnz(self) -> int:
        return self.data.size

    @property
    def nbytes(self) -> int:
        return self.indptr.nbytes + self.indices.nbytes + self.data.nbytes

    def row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))

    def matmul(self, x: np.ndarray, data: np.ndarray | None = None) -> np.ndarray:
        """``A @ x`` for ``x`` of shape (n_cols,) or (n_cols, m).

        Each row's products are reduced left to right in storage order.
        """
        vals = self.data if data is None else data
        x = np.asarray(x)
        out_shape = (self.shape[0],) + x.shape[1:]
        out = np.zeros(out_shape, dtype=np.result_type(vals, x))
        if self.nnz == 0:
            return out
        prod = vals.reshape((-1,) + (1,) * (x.ndim - 1)) * x[self.indices]
        starts = self.indptr[:-1]
        nonempty = self.indptr[1:] > starts
        out[nonempty] = np.add.reduceat(prod, starts[nonempty], axis=0)
        return out

    def todense(self, dtype=None) -> np.ndarray:
        dense = np.zeros(self.shape, dtype=dtype or self.data.dtype)
        dense[self.row_ids(), self.indices] = self.data
        return dense


@dataclass(frozen=True)
class SelectionMatrix:
    """Per-channel CSR interpolation matrices (rows = pixels, cols = n_s)."""

    channels: tuple[CsrMatrix, ...]
    n_s: int
    rotation: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def n_c(self) -> int:
        return len(self.channels)

    @property
    def n_pixels(self) -> int:
        return self.channels[0].shape[0]

    @property
    def nbytes(self) -> int:
        n = sum(m.nbytes for m in self.channels)
        return n + (sum(r.nbytes for r in self.rotation) if self.rotation else 0)

    def values_f32(self) -> list[np.ndarray]:
        return [m.data.astype(np.float32) for m in self.channels]


def build_selection_matrix(table: DelayTable) -> SelectionMatrix:
    """Row ``p`` of channel ``c`` stores ``apod*(1-frac)`` at ``k`` and ``apod*frac`` at ``k+1``."""
    active = table.apod > 0
    mats = []
    for c in range(table.n_c):
        act = active[:, c]
        d = table.delay_samples[act, c]
        a = table.apod[act, c]
        k = np.floor(d).astype(np.int64)
        frac = d - k
        counts = np.where(act, 2, 0)
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        indices = np.stack([k, k + 1], axis=1).ravel().astype(np.int32)
        data = np.stack([a * (1.0 - frac), a * frac], axis=1).ravel()
        mats.append(CsrMatrix(indptr, indices, data, (table.n_pixels, table.n_s)))
    return SelectionMatrix(tuple(mats), table.n_s, table.rotation())


@dataclass(frozen=True)
class DenseSelectionMatrix:
    """Dense float32 form of a :class:`SelectionMatrix`, shape (n_c, n_pixels, n_s)."""

    weights: np.ndarray
    rotation: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def n_c(self) -> int:
        return self.weights.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.weights.shape[1]

    @property
    def n_s(self) -> int:
        return self.weights.shape[2]

    @property
    def nbytes(self) -> int:
        return self.weights.nbytes + (sum(r.nbytes for r in self.rotation) if self.rotation else 0)


def densify(sel: SelectionMatrix) -> DenseSelectionMatrix:
    w = np.zeros((sel.n_c, sel.n_pixels, sel.n_s), dtype=np.float32)
    for c, m in enumerate(sel.channels):
        w[c] = m.todense(np.float32)
    return DenseSelectionMatrix(w, sel.rotation)


def _stack_channel(iq: IqTensor, c: int) -> np.ndarray:
    return np.concatenate([iq.re[:, c, :], iq.im[:, c, :]], axis=1)


def das_sparse(iq: IqTensor, sel: SelectionMatrix, values: list[np.ndarray] | None = None) -> IqTensor:
    """Sum over channels of CSR products, applied to re and im together.

    ``values`` may carry the float32 weights from :meth:`SelectionMatrix.values_f32`
    to avoid recasting on every call.
    """
    check_iq(iq, sel.n_s, sel.n_c)
    values = sel.values_f32() if values is None else values
    n_f = iq.n_f
    out_re = np.zeros((sel.n_pixels, n_f), dtype=np.float32)
    out_im = np.zeros((sel.n_pixels, n_f), dtype=np.float32)
    for c, m in enumerate(sel.channels):
        y = m.matmul(_stack_channel(iq, c), values[c])
        _accumulate(out_re, out_im, y[:, :n_f], y[:, n_f:], sel.rotation, c)
    return IqTensor(out_re[:, None, :], out_im[:, None, :])


def das_dense_cnn(iq: IqTensor, sel: DenseSelectionMatrix) -> IqTensor:
    """Per-channel 1x1 convolution over the axial axis, then a channel sum."""
    check_iq(iq, sel.n_s, sel.n_c)
    n_f = iq.n_f
    out_re = np.zeros((sel.n_pixels, n_f), dtype=np.float32)
    out_im = np.zeros((sel.n_pixels, n_f), dtype=np.float32)
    for c in range(sel.n_c):
        y = sel.weights[c] @ _stack_channel(iq, c)
        _accumulate(out_re, out_im, y[:, :n_f], y[:, n_f:], sel.rotation, c)
    return IqTensor(out_re[:, None, :], out_im[:, None, :])


def max_rel_dev(a: IqTensor, b: IqTensor) -> float:
    """``max|a - b| / max|b|`` over complex samples (0 when both are zero)."""
    za, zb = a.to_complex(), b.to_complex()
    scale = np.max(np.abs(zb)) if zb.size else 0.0
    diff = np.max(np.abs(za - zb)) if za.size else 0.0
    if scale == 0.0:
        return float(diff)
    return float(diff / scale)
