"""JSON run configuration.

Schema (all blocks optional; missing keys take the defaults below)::

    {
      "acquisition": {"fs": 20e6, "fc": 5e6, "c": 1540.0, "prf": 5000.0, "n_l": 1024, "n_f": 32},
      "probe":       {"n_elements": 32, "pitch": 3e-4},
      "grid":        {"x_min": -4.8e-3, "x_max": 4.8e-3, "z_min": 10e-3, "z_max": 30e-3, "nx": 33, "nz": 41},
      "processing":  {"dynamic_range_db": 60, "smoothing_kernel": 5, "fir_taps": 63,
                      "apodization": "rectangular", "variant": "gather", "modality": "bmode"},
      "scatterers":  [{"x": 0.0, "z": 0.02, "amplitude": 1.0, "v_axial": 0.0}],
      "bench":       {"warmup_iters": 10, "timed_iters": 100}
    }
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, replace

from .core import ImageGrid, PipelineConfig, ProbeGeometry
from .rfio import RfFileHeader, Scatterer

DEFAULTS = {
    "acquisition": {"fs": 20e6, "fc": 5e6, "c": 1540.0, "prf": 5000.0, "n_l": 1024, "n_f": 32},
    "probe": {"n_elements": 32, "pitch": 3e-4},
    "grid": {"x_min": -4.8e-3, "x_max": 4.8e-3, "z_min": 10e-3, "z_max": 30e-3, "nx": 33, "nz": 41},
    "processing": {
        "dynamic_range_db": 60.0,
        "smoothing_kernel": 5,
        "fir_taps": 63,
        "apodization": "rectangular",
        "variant": "gather",
        "modality": "bmode",
    },
    "scatterers": [
        {"x": 0.0, "z": 20e-3, "amplitude": 1.0, "v_axial": 0.0},
        {"x": -2.4e-3, "z": 15e-3, "amplitude": 0.5, "v_axial": 0.0},
        {"x": 2.4e-3, "z": 25e-3, "amplitude": 0.5, "v_axial": 0.05},
    ],
    "bench": {"warmup_iters": 10, "timed_iters": 100},
}

_BLOCK_KEYS = {k: set(v) for k, v in DEFAULTS.items() if isinstance(v, dict)}


@dataclass(frozen=True)
class RunConfig:
    pipeline: PipelineConfig
    probe: ProbeGeometry
    grid: ImageGrid
    n_l: int
    scatterers: tuple[Scatterer, ...]
    warmup_iters: int
    timed_iters: int

    def with_header(self, header: RfFileHeader) -> "RunConfig":
        """Acquisition physics and dims taken from an RF file header."""
        pipeline = replace(self.pipeline, fs=header.fs, fc=header.fc, c=header.c, prf=header.prf, n_f=header.n_f)
        probe = ProbeGeometry(self.probe.n_elements, self.probe.pitch, header.c)
        return replace(self, pipeline=pipeline, probe=probe, n_l=header.n_l)

    def with_pipeline(self, **changes) -> "RunConfig":
        return replace(self, pipeline=replace(self.pipeline, **changes))


def merge_config(raw: dict) -> dict:
    merged = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if key == "scatterers":
            merged[key] = list(value)
        elif key in _BLOCK_KEYS:
            unknown = set(value) - _BLOCK_KEYS[key]
            if unknown:
                raise ValueError(f"unknown keys in '{key}': {sorted(unknown)}")
            merged[key].update(value)
        else:
            raise ValueError(f"unknown config block {key!r}")
    return merged


def parse_config(raw: dict) -> RunConfig:
    m = merge_config(raw)
    acq, proc = m["acquisition"], m["processing"]
    pipeline = PipelineConfig(
        fs=float(acq["fs"]),
        fc=float(acq["fc"]),
        c=float(acq["c"]),
        prf=float(acq["prf"]),
        n_f=int(acq["n_f"]),
        dynamic_range_db=float(proc["dynamic_range_db"]),
        smoothing_kernel=int(proc["smoothing_kernel"]),
        fir_taps=int(proc["fir_taps"]),
        variant=proc["variant"],
        modality=proc["modality"],
        apodization=proc["apodization"],
    )
    probe = ProbeGeometry(int(m["probe"]["n_elements"]), float(m["probe"]["pitch"]), pipeline.c)
    g = m["grid"]
    grid = ImageGrid(float(g["x_min"]), float(g["x_max"]), float(g["z_min"]), float(g["z_max"]), int(g["nx"]), int(g["nz"]))
    scatterers = tuple(Scatterer(**s) for s in m["scatterers"])
    n_l = int(acq["n_l"])
    if n_l < 2:
        raise ValueError("n_l must be >= 2")
    return RunConfig(pipeline, probe, grid, n_l, scatterers, int(m["bench"]["warmup_iters"]), int(m["bench"]["timed_iters"]))


def load_config(path=None) -> RunConfig:
    if path is None:
        return parse_config({})
    with open(path) as fh:
        return parse_config(json.load(fh))
