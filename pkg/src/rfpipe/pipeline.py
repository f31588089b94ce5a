"""End-to-end RF -> IQ -> beamformed IQ -> image pipelines.

Every table (mixing phasors, FIR taps, delays, selection matrices) is built in
``Pipeline.__init__``; ``__call__`` only runs the forward pass. The stage
sequence is the same for all variants, only the beamformer object differs.
"""

from __future__ import annotations

import numpy as np

from .bench import MemoryTracker
from .beamformer import (
    DelayTable,
    check_iq,
    gather_apply,
    build_selection_matrix,
    compute_delay_table,
    das_dense_cnn,
    das_sparse,
    densify,
)
from .core import ImageGrid, IqTensor, Modality, PipelineConfig, ProbeGeometry, RfTensor, Variant
from .frontend import FirKernel, default_fir, demodulate, mixing_table
from .modalities import bmode, color_doppler, power_doppler


class GatherBeamformer:
    def __init__(self, table: DelayTable):
        self.n_s, self.n_c = table.n_s, table.n_c
        self.k, self.w0, self.w1 = table.taps()
        self.rot = table.rotation()

    @property
    def nbytes(self) -> int:
        n = self.k.nbytes + self.w0.nbytes + self.w1.nbytes
        return n + (sum(r.nbytes for r in self.rot) if self.rot else 0)

    def __call__(self, iq: IqTensor) -> IqTensor:
        check_iq(iq, self.n_s, self.n_c)
        return gather_apply(iq, self.k, self.w0, self.w1, self.rot)


class SparseBeamformer:
    def __init__(self, table: DelayTable):
        self.sel = build_selection_matrix(table)
        self.values = self.sel.values_f32()

    @property
    def nbytes(self) -> int:
        return self.sel.nbytes + sum(v.nbytes for v in self.values)

    def __call__(self, iq: IqTensor) -> IqTensor:
        return das_sparse(iq, self.sel, self.values)


class DenseCnnBeamformer:
    def __init__(self, table: DelayTable):
        self.dense = densify(build_selection_matrix(table))

    @property
    def nbytes(self) -> int:
        return self.dense.nbytes

    def __call__(self, iq: IqTensor) -> IqTensor:
        return das_dense_cnn(iq, self.dense)


BEAMFORMERS = {Variant.GATHER: GatherBeamformer, Variant.SPARSE: SparseBeamformer, Variant.FULL_CNN: DenseCnnBeamformer}


def das_scratch_bytes(variant: Variant, n_pixels: int, n_s: int, n_f: int) -> int:
    """Transient float32 bytes one channel step of the DAS stage materialises."""
    per_channel = 2 * n_pixels * n_f * 4  # interpolated re/im for one channel
    if variant is Variant.GATHER:
        return 2 * per_channel  # both gathered taps
    return 2 * n_s * n_f * 4 + per_channel  # stacked re|im input column block + product


class Pipeline:
    """One modality / variant combination with all constants precomputed.

    If ``memory`` is given, constant buffers stay registered for the lifetime
    of the pipeline and every intermediate tensor is registered while it is
    live, so the tracker's high-water mark reflects the working set.
    """

    def __init__(
        self,
        cfg: PipelineConfig,
        geom: ProbeGeometry,
        grid: ImageGrid,
        n_l: int,
        memory: MemoryTracker | None = None,
        fir: FirKernel | None = None,
    ):
        self.cfg, self.geom, self.grid, self.n_l = cfg, geom, grid, n_l
        self.memory = memory
        self.fir = fir or default_fir(cfg)
        self.mix = mixing_table(n_l, cfg.fs, cfg.fc)
        self.table = compute_delay_table(geom, grid, cfg, n_s=n_l)
        self.beamformer = BEAMFORMERS[cfg.variant](self.table)
        self.constant_bytes = self.fir.taps.nbytes + sum(m.nbytes for m in self.mix) + self.beamformer.nbytes
        self._alloc(self.constant_bytes)

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.nz, self.grid.nx

    @property
    def pipeline_id(self) -> str:
        return self.cfg.modality.pipeline_id

    def _alloc(self, n: int):
        if self.memory is not None:
            self.memory.alloc(n)

    def _free(self, n: int):
        if self.memory is not None:
            self.memory.free(n)

    def release(self):
        """Drop the constant-buffer registration from the tracker."""
        self._free(self.constant_bytes)
        self.constant_bytes = 0

    def check_input(self, rf: RfTensor):
        if (rf.n_l, rf.n_c, rf.n_f) != (self.n_l, self.geom.n_elements, self.cfg.n_f):
            raise ValueError(
                f"RF dims {(rf.n_l, rf.n_c, rf.n_f)} do not match pipeline "
                f"{(self.n_l, self.geom.n_elements, self.cfg.n_f)}"
            )

    def demodulate(self, rf: RfTensor) -> IqTensor:
        return demodulate(rf, self.cfg, self.fir, self.mix)

    def beamform(self, iq: IqTensor) -> IqTensor:
        scratch = das_scratch_bytes(self.cfg.variant, self.table.n_pixels, iq.n_s, iq.n_f)
        self._alloc(scratch)
        try:
            return self.beamformer(iq)
        finally:
            self._free(scratch)

    def image(self, iq_bf: IqTensor) -> np.ndarray:
        m = self.cfg.modality
        if m is Modality.BMODE:
            return bmode(iq_bf, self.shape, self.cfg.dynamic_range_db)
        if m is Modality.COLOR_DOPPLER:
            return color_doppler(iq_bf, self.shape, self.cfg)
        return power_doppler(iq_bf, self.shape, self.cfg)

    def __call__(self, rf: RfTensor) -> np.ndarray:
        self.check_input(rf)
        iq = self.demodulate(rf)
        self._alloc(iq.nbytes)
        bf = self.beamform(iq)
        self._alloc(bf.nbytes)
        self._free(iq.nbytes)
        del iq
        img = self.image(bf)
        self._alloc(img.nbytes)
        self._free(bf.nbytes)
        self._free(img.nbytes)
        return img
