import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfpipe.core import IqTensor, PipelineConfig
from rfpipe.modalities import (
    bmode,
    color_doppler,
    kasai_scale,
    power_doppler,
    read_pgm,
    read_raw,
    write_pgm,
    write_raw,
)

SHAPE = (6, 5)


def beamformed(z):
    """(n_f, nz, nx) complex stack -> beamformed IqTensor (n_pixels, 1, n_f)."""
    z = np.asarray(z)
    flat = np.moveaxis(z, 0, -1).reshape(-1, 1, z.shape[0])
    return IqTensor.from_complex(flat)


def random_stack(rng, n_f=4, shape=SHAPE):
    return rng.standard_normal((n_f,) + shape) + 1j * rng.standard_normal((n_f,) + shape)


DOPPLER = PipelineConfig(c=1540.0, prf=5000.0, fc=5e6, n_f=8, modality="color_doppler")


# --- B-mode -------------------------------------------------------------------


def test_bmode_constant_magnitude_is_white(rng):
    phases = rng.uniform(-np.pi, np.pi, (3,) + SHAPE)
    img = bmode(beamformed(2.5 * np.exp(1j * phases)), SHAPE)
    assert img.shape == (3,) + SHAPE
    np.testing.assert_array_equal(img, 1.0)


def test_bmode_dynamic_range_floor():
    z = np.zeros((1,) + SHAPE, dtype=complex)
    z[0, 0, 0] = 1000.0
    z[0, 1, 1] = 1.0
    img = bmode(beamformed(z), SHAPE, 60.0)
    assert img[0, 0, 0] == 1.0
    # the 1e-12 log floor leaves -60 dB a hair above the clip point
    assert img[0, 1, 1] == pytest.approx(0.0, abs=1e-8)


def test_bmode_linear_db_mapping():
    z = np.zeros((1,) + SHAPE, dtype=complex)
    z[0, 0, 0] = 1.0
    z[0, 0, 1] = 10 ** (-30 / 20)  # -30 dB, half of a 60 dB window
    img = bmode(beamformed(z), SHAPE, 60.0)
    assert img[0, 0, 1] == pytest.approx(0.5, abs=1e-6)


def test_bmode_scale_invariant_bitwise(rng):
    # power-of-two components make the 7.3x scaling exact in float32
    signs = rng.choice([-1.0, 1.0], size=(2, 4) + SHAPE)
    exps = rng.integers(-12, 4, size=(2, 4) + SHAPE)
    z = signs[0] * np.ldexp(1.0, exps[0]) + 1j * signs[1] * np.ldexp(1.0, exps[1])
    iq = beamformed(z)
    a = np.float32(7.3)
    scaled = IqTensor(iq.re * a, iq.im * a)
    assert np.array_equal(scaled.re / a, iq.re)  # scaling was exact
    assert bmode(scaled, SHAPE).tobytes() == bmode(iq, SHAPE).tobytes()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_bmode_range_and_scale_invariance(seed, alpha):
    rng = np.random.default_rng(seed)
    z = random_stack(rng)
    a = bmode(beamformed(z), SHAPE)
    b = bmode(beamformed(alpha * z), SHAPE)
    assert a.min() >= 0.0 and a.max() <= 1.0
    np.testing.assert_allclose(a, b, atol=1e-5)


def test_bmode_zero_frame():
    img = bmode(beamformed(np.zeros((2,) + SHAPE, dtype=complex)), SHAPE)
    np.testing.assert_array_equal(img, 0.0)


def test_bmode_per_frame_normalisation(rng):
    z = random_stack(rng, n_f=2)
    z[1] *= 100.0
    img = bmode(beamformed(z), SHAPE)
    assert img[0].max() == 1.0 and img[1].max() == 1.0


def test_bmode_rejects_bad_range(rng):
    with pytest.raises(ValueError):
        bmode(beamformed(random_stack(rng)), SHAPE, 0.0)


def test_bmode_grid_mismatch(rng):
    with pytest.raises(ValueError):
        bmode(beamformed(random_stack(rng)), (5, 5))


# --- colour Doppler -------------------------------------------------------------


def test_doppler_static_is_zero(rng):
    frame = random_stack(rng, n_f=1)[0]
    v = color_doppler(beamformed(np.repeat(frame[None], 8, axis=0)), SHAPE, DOPPLER)
    np.testing.assert_array_equal(v, 0.0)


def test_doppler_kasai_quarter_cycle():
    f = np.arange(8)[:, None, None]
    z = np.exp(1j * f * np.pi / 2) * np.ones((1,) + SHAPE)
    v = color_doppler(beamformed(z), SHAPE, DOPPLER)
    expect = 1540.0 * 5000.0 / (4 * math.pi * 5e6) * (math.pi / 2)
    assert expect == pytest.approx(0.1925, abs=5e-5)
    np.testing.assert_allclose(v, expect, rtol=1e-5)


def test_doppler_conjugate_negates(rng):
    f = np.arange(8)[:, None, None]
    z = random_stack(rng, n_f=1) * np.exp(1j * 0.7 * f)
    z = z + 0.1 * random_stack(rng, n_f=8)
    v = color_doppler(beamformed(z), SHAPE, DOPPLER)
    w = color_doppler(beamformed(np.conj(z)), SHAPE, DOPPLER)
    np.testing.assert_array_equal(w, -v)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_doppler_bounded_by_nyquist(seed):
    v = color_doppler(beamformed(random_stack(np.random.default_rng(seed), n_f=5)), SHAPE, DOPPLER)
    assert np.all(np.abs(v) <= DOPPLER.v_nyquist * (1 + 1e-6))


def test_doppler_needs_two_frames(rng):
    with pytest.raises(ValueError):
        color_doppler(beamformed(random_stack(rng, n_f=1)), SHAPE, DOPPLER)


def test_doppler_smoothing_averages_r1_not_angle():
    # two pixels with phase steps just either side of +/-pi average to pi, not 0
    f = np.arange(4)[:, None, None]
    step = np.full((1, 1, 3), 0.0)
    step[0, 0, 0], step[0, 0, 2] = math.pi - 0.1, -math.pi + 0.1
    z = np.exp(1j * f * step)
    z[:, 0, 1] = 0.0
    cfg = PipelineConfig(n_f=4, smoothing_kernel=3, modality="color_doppler")
    v = color_doppler(beamformed(z), (1, 3), cfg)
    assert abs(v[0, 1]) == pytest.approx(kasai_scale(cfg) * math.pi, rel=1e-6)


# --- power Doppler ----------------------------------------------------------------


def test_power_floor():
    p = power_doppler(beamformed(np.zeros((4,) + SHAPE, dtype=complex)), SHAPE)
    np.testing.assert_array_equal(p, np.float32(-120.0))


def test_power_unit_magnitude_32_frames(rng):
    z = np.zeros((32,) + SHAPE, dtype=complex)
    z[:, 2, 3] = np.exp(1j * rng.uniform(-np.pi, np.pi, 32))
    p = power_doppler(beamformed(z), SHAPE)
    assert p[2, 3] == pytest.approx(10 * math.log10(32), abs=1e-5)
    assert p[2, 3] == pytest.approx(15.051, abs=1e-3)


@pytest.mark.parametrize("alpha", [0.5, 3.0, 1e3])
def test_power_scaling_shifts_db(rng, alpha):
    z = random_stack(rng)
    a = power_doppler(beamformed(z), SHAPE)
    b = power_doppler(beamformed(alpha * z), SHAPE)
    np.testing.assert_allclose(b - a, 20 * math.log10(alpha), atol=1e-4)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_power_monotone(seed):
    rng = np.random.default_rng(seed)
    y = random_stack(rng)
    x = y * rng.uniform(0, 1, y.shape)
    assert np.all(power_doppler(beamformed(x), SHAPE) <= power_doppler(beamformed(y), SHAPE))


# --- determinism and export -----------------------------------------------------


def test_modalities_deterministic(rng):
    iq = beamformed(random_stack(rng, n_f=6))
    for fn in (lambda: bmode(iq, SHAPE), lambda: color_doppler(iq, SHAPE, DOPPLER), lambda: power_doppler(iq, SHAPE)):
        assert fn().tobytes() == fn().tobytes()


def test_pgm_round_trip(tmp_path, rng):
    img = rng.uniform(0, 1, SHAPE)
    img[0, 0], img[0, 1] = 0.0, 1.0
    path = tmp_path / "x.pgm"
    write_pgm(path, img, 0.0, 1.0)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n5 6\n255\n")
    back = read_pgm(path)
    np.testing.assert_array_equal(back, np.round(img * 255).astype(np.uint8))


def test_pgm_pixel_bytes_that_look_like_whitespace(tmp_path):
    img = np.array([[10, 32, 9, 200]], dtype=float)
    path = tmp_path / "ws.pgm"
    write_pgm(path, img, 0, 255)
    np.testing.assert_array_equal(read_pgm(path), [[10, 32, 9, 200]])


def test_raw_dump_little_endian_row_major(tmp_path):
    img = np.arange(6, dtype=np.float32).reshape(2, 3)
    path = tmp_path / "x.f32"
    write_raw(path, img)
    assert path.read_bytes() == np.arange(6, dtype="<f4").tobytes()
    np.testing.assert_array_equal(read_raw(path, (2, 3)), img)
