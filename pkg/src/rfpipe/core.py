"""Shared tensors, acquisition configuration and the small kernel set every stage uses.

Conventions
-----------
Tensors are stored as numpy arrays of shape ``(n_l, n_c, n_f)`` (axial, channel,
frame) in Fortran order, so a flat view with ``order="F"`` has the axial index
fastest-varying. Pipeline data is float32; geometry tables and metric
arithmetic are float64.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class Variant(enum.Enum):
    GATHER = "gather"
    FULL_CNN = "full_cnn"
    SPARSE = "sparse"

    @property
    def label(self) -> str:
        return {
            Variant.GATHER: "Dynamic indexing",
            Variant.FULL_CNN: "Full CNN",
            Variant.SPARSE: "Sparse matrices",
        }[self]


class Modality(enum.Enum):
    BMODE = "bmode"
    COLOR_DOPPLER = "color_doppler"
    POWER_DOPPLER = "power_doppler"

    @property
    def pipeline_id(self) -> str:
        return {
            Modality.BMODE: "RF2IQ_DAS_BMODE",
            Modality.COLOR_DOPPLER: "RF2IQ_DAS_DOPPLER",
            Modality.POWER_DOPPLER: "RF2IQ_DAS_POWERDOPPLER",
        }[self]


class Apodization(enum.Enum):
    RECTANGULAR = "rectangular"
    HANN = "hann"


def _parse_enum(cls, value):
    if isinstance(value, cls):
        return value
    try:
        return cls(str(value).lower())
    except ValueError:
        choices = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown {cls.__name__} {value!r}; expected one of: {choices}") from None


@dataclass(frozen=True)
class RfTensor:
    """Raw real-valued RF samples with dims ``(n_l, n_c, n_f)``."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ValueError(f"RF data must be 3-D (n_l, n_c, n_f), got shape {data.shape}")
        if data.dtype.kind not in "iuf":
            raise ValueError(f"RF data must be real, got dtype {data.dtype}")
        if data.dtype.kind == "f" and not np.all(np.isfinite(data)):
            raise ValueError("RF data contains NaN or Inf")
        object.__setattr__(self, "data", np.asfortranarray(data))

    @property
    def n_l(self) -> int:
        return self.data.shape[0]

    @property
    def n_c(self) -> int:
        return self.data.shape[1]

    @property
    def n_f(self) -> int:
        return self.data.shape[2]

    @property
    def nbytes(self) -> int:
        return self.data.nbytes

    def flat(self) -> np.ndarray:
        """Samples in canonical axial-fastest order."""
        return self.data.ravel(order="F")


@dataclass(frozen=True)
class IqTensor:
    """Complex baseband samples kept as separate real and imaginary planes.

    Beamformed data reuses this type with ``n_s = n_pixels`` and ``n_c = 1``.
    """

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re = np.asarray(self.re)
        im = np.asarray(self.im)
        if re.shape != im.shape or re.ndim != 3:
            raise ValueError(f"re/im must share a 3-D shape, got {re.shape} and {im.shape}")
        if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
            raise ValueError("IQ data contains NaN or Inf")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def from_complex(cls, z: np.ndarray, dtype=np.float32) -> "IqTensor":
        z = np.asarray(z)
        return cls(np.ascontiguousarray(z.real, dtype=dtype), np.ascontiguousarray(z.imag, dtype=dtype))

    def to_complex(self) -> np.ndarray:
        return self.re.astype(np.float64) + 1j * self.im.astype(np.float64)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.re.shape

    @property
    def n_s(self) -> int:
        return self.re.shape[0]

    @property
    def n_c(self) -> int:
        return self.re.shape[1]

    @property
    def n_f(self) -> int:
        return self.re.shape[2]

    @property
    def nbytes(self) -> int:
        return self.re.nbytes + self.im.nbytes


@dataclass(frozen=True)
class ProbeGeometry:
    """Linear array centred on x = 0."""

    n_elements: int
    pitch: float
    c: float = 1540.0
    element_x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        if not self.pitch > 0 or not self.c > 0:
            raise ValueError("pitch and sound speed must be positive")
        x = (np.arange(self.n_elements, dtype=np.float64) - (self.n_elements - 1) / 2.0) * self.pitch
        x.setflags(write=False)
        object.__setattr__(self, "element_x", x)

    @property
    def aperture(self) -> float:
        return self.n_elements * self.pitch


@dataclass(frozen=True)
class ImageGrid:
    x_min: float
    x_max: float
    z_min: float
    z_max: float
    nx: int
    nz: int

    def __post_init__(self):
        if self.nx < 1 or self.nz < 1:
            raise ValueError("nx and nz must be >= 1")
        if self.z_min < 0:
            raise ValueError("z_min must be >= 0")
        if not (self.x_max > self.x_min and self.z_max > self.z_min):
            raise ValueError("grid extents must satisfy x_max > x_min and z_max > z_min")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.nz)

    @property
    def n_pixels(self) -> int:
        return self.nx * self.nz

    def pixel_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (x, z) per pixel; pixel index is ``iz * nx + ix``."""
        zz, xx = np.meshgrid(self.z, self.x, indexing="ij")
        return xx.ravel(), zz.ravel()

    def nearest_pixel(self, x: float, z: float) -> tuple[int, int]:
        """(iz, ix) of the grid point closest to (x, z)."""
        return int(np.argmin(np.abs(self.z - z))), int(np.argmin(np.abs(self.x - x)))


@dataclass(frozen=True)
class PipelineConfig:
    fs: float = 20e6
    fc: float = 5e6
    c: float = 1540.0
    prf: float = 5000.0
    n_f: int = 32
    dynamic_range_db: float = 60.0
    smoothing_kernel: int = 5
    fir_taps: int = 63
    variant: Variant = Variant.GATHER
    modality: Modality = Modality.BMODE
    apodization: Apodization = Apodization.RECTANGULAR

    def __post_init__(self):
        object.__setattr__(self, "variant", _parse_enum(Variant, self.variant))
        object.__setattr__(self, "modality", _parse_enum(Modality, self.modality))
        object.__setattr__(self, "apodization", _parse_enum(Apodization, self.apodization))
        if not self.fc > 0 or not self.fs > 2 * self.fc:
            raise ValueError(f"sampling rate {self.fs} must exceed twice the carrier {self.fc}")
        if not self.c > 0:
            raise ValueError("sound speed must be positive")
        if not self.prf > 0:
            raise ValueError("prf must be positive")
        if self.n_f < 1:
            raise ValueError("n_f must be >= 1")
        if self.modality is not Modality.BMODE and self.n_f < 2:
            raise ValueError(f"{self.modality.value} needs an ensemble of n_f >= 2 frames")
        if not self.dynamic_range_db > 0:
            raise ValueError("dynamic_range_db must be positive")
        for name in ("smoothing_kernel", "fir_taps"):
            v = getattr(self, name)
            if v < 1 or v % 2 == 0:
                raise ValueError(f"{name} must be odd and >= 1, got {v}")

    @property
    def v_nyquist(self) -> float:
        return self.c * self.prf / (4.0 * self.fc)


def conv1d_same(signal, kernel, axis: int = 0) -> np.ndarray:
    """Zero-padded 'same' correlation of ``signal`` with an odd-length ``kernel``.

    ``out[i] = sum_k kernel[k] * signal[i + k - (K - 1) // 2]`` along ``axis``.
    Taps are accumulated in ascending ``k`` so results do not depend on
    array size or threading.
    """
    signal = np.asarray(signal)
    kernel = np.asarray(kernel)
    if kernel.ndim != 1 or kernel.size % 2 == 0:
        raise ValueError(f"kernel length must be odd, got {kernel.size}")
    if signal.size == 0:
        raise ValueError("signal must be non-empty")
    if signal.dtype.kind in "fc":
        kernel = kernel.astype(signal.real.dtype)
    x = np.moveaxis(signal, axis, 0)
    n = x.shape[0]
    half = (kernel.size - 1) // 2
    out = np.zeros(x.shape, dtype=np.result_type(x, kernel))
    for k, w in enumerate(kernel):
        shift = k - half
        lo, hi = max(0, -shift), min(n, n - shift)
        if lo < hi:
            out[lo:hi] += w * x[lo + shift : hi + shift]
    return np.moveaxis(out, 0, axis)


def conv2d_same(image, kernel) -> np.ndarray:
    """Zero-padded 'same' 2-D correlation over the last two axes."""
    image = np.asarray(image)
    kernel = np.asarray(kernel)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ValueError(f"kernel dims must be odd, got {kernel.shape}")
    if image.dtype.kind in "fc":
        kernel = kernel.astype(image.real.dtype)
    nz, nx = image.shape[-2:]
    hz, hx = (kernel.shape[0] - 1) // 2, (kernel.shape[1] - 1) // 2
    out = np.zeros(image.shape, dtype=np.result_type(image, kernel))
    for i in range(kernel.shape[0]):
        dz = i - hz
        z0, z1 = max(0, -dz), min(nz, nz - dz)
        if z0 >= z1:
            continue
        for j in range(kernel.shape[1]):
            dx = j - hx
            x0, x1 = max(0, -dx), min(nx, nx - dx)
            if x0 >= x1:
                continue
            out[..., z0:z1, x0:x1] += kernel[i, j] * image[..., z0 + dz : z1 + dz, x0 + dx : x1 + dx]
    return out


def box_kernel(side: int) -> np.ndarray:
    if side < 1 or side % 2 == 0:
        raise ValueError(f"box side must be odd and >= 1, got {side}")
    return np.full((side, side), 1.0 / (side * side))


def complex_mag(iq) -> np.ndarray:
    """Elementwise ``sqrt(re**2 + im**2)`` of an :class:`IqTensor` or ``(re, im)`` pair."""
    re, im = (iq.re, iq.im) if isinstance(iq, IqTensor) else iq
    re = np.asarray(re)
    im = np.asarray(im)
    return np.sqrt(re * re + im * im)


def atan2_phase(im, re):
    """Two-argument arctangent in (-pi, pi], with atan2(0, 0) = 0.

    Signed zeros are folded so that the result never equals -pi.
    """
    im = np.asarray(im, dtype=np.float64) + 0.0
    re = np.asarray(re, dtype=np.float64) + 0.0
    out = np.arctan2(im, re)
    out = np.where(out == -math.pi, math.pi, out)
    return out if out.ndim else float(out)
