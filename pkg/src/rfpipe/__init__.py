"""Deterministic ultrasound RF-to-image pipelines in gather, dense and sparse form, with a steady-state benchmark harness."""

from .beamformer import (
    CsrMatrix,
    DelayTable,
    DenseSelectionMatrix,
    SelectionMatrix,
    build_selection_matrix,
    compute_delay_table,
    das_dense_cnn,
    das_gather,
    das_sparse,
    densify,
    max_rel_dev,
)
from .bench import (
    BenchResult,
    BenchSpec,
    MemoryTracker,
    PowerSample,
    emit_report,
    energy_per_run,
    fps,
    run_benchmark,
    throughput_mbps,
)
from .core import (
    Apodization,
    ImageGrid,
    IqTensor,
    Modality,
    PipelineConfig,
    ProbeGeometry,
    RfTensor,
    Variant,
    atan2_phase,
    complex_mag,
    conv1d_same,
    conv2d_same,
)
from .frontend import FirKernel, demodulate, design_lowpass_fir
from .modalities import bmode, color_doppler, power_doppler
from .pipeline import Pipeline
from .rfio import RfFileHeader, Scatterer, load_rf, save_rf, synth_rf

__version__ = "0.1.0"
