import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import direct_filter, transfer_oracle
from fsitm.errors import BankTooLargeForImage, DimensionMismatch, InvalidParameter
from fsitm.fixtures import SyntheticScene, render_scene
from fsitm.loggabor import (
    FilterParams,
    apply_bank,
    build_bank,
    local_phase,
    lwmpa,
    phase_from_sums,
    radial_profile,
)

SMALL = FilterParams(nscale=2, min_wavelength=2, mult=2)
WIDE = FilterParams(nscale=3, min_wavelength=3, mult=1.7, norient=4, sigma_on_f=0.65, d_theta_sigma=1.5)


def half_angle_atan2(x, y):
    """Half-angle evaluation of the angle whose sine goes with x and cosine with y.

    Uses ``2 atan(x / (r + y))`` on the right half-plane and the conjugate
    form ``2 atan((r - y) / x)`` on the left, which avoids cancellation.
    """
    r = math.hypot(x, y)
    if y >= 0:
        return 2.0 * math.atan(x / (r + y))
    return 2.0 * math.atan((r - y) / x)


# --- parameters and bank construction ---------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(nscale=0), dict(min_wavelength=1.5), dict(mult=1.0), dict(norient=0),
    dict(sigma_on_f=1.0), dict(sigma_on_f=0.0), dict(d_theta_sigma=0),
])
def test_filter_params_invariants(kwargs):
    with pytest.raises(InvalidParameter):
        FilterParams(**kwargs)


@pytest.mark.parametrize("params", [SMALL, WIDE, FilterParams(2, 8, 8)])
def test_dc_bin_zero_and_nonnegative(params):
    bank = build_bank(params, 64, 70)
    filters = bank.filters
    assert filters.shape == (params.nscale, params.norient, 70, 64)
    assert np.all(filters[:, :, 0, 0] == 0.0)
    assert np.all(filters >= 0)


def test_bank_deterministic():
    a = build_bank(WIDE, 33, 40)
    b = build_bank(WIDE, 33, 40)
    assert a.filters.tobytes() == b.filters.tobytes()
    assert a.summed_transfer.tobytes() == b.summed_transfer.tobytes()


@pytest.mark.parametrize("shape", [(16, 16), (12, 15), (9, 10)])
@pytest.mark.parametrize("params", [SMALL, FilterParams(nscale=2, min_wavelength=2, mult=3, norient=3)])
def test_bank_matches_per_bin_formula(shape, params):
    h, w = shape
    bank = build_bank(params, w, h)
    for s in range(params.nscale):
        for o in range(params.norient):
            np.testing.assert_allclose(bank.transfer(s, o), transfer_oracle(params, h, w, s, o),
                                       rtol=0, atol=1e-13)


def test_radial_peaks_on_dense_sweep():
    freq = np.linspace(1e-4, 0.5, 500_001)
    for wavelength, peak in ((2.0, 0.5), (4.0, 0.25)):
        f = freq[np.argmax(radial_profile(freq, wavelength, 0.55))]
        assert f == pytest.approx(peak, abs=2e-6)


def test_bank_too_large():
    with pytest.raises(BankTooLargeForImage):
        build_bank(FilterParams(2, 8, 8), 63, 100)
    build_bank(FilterParams(2, 8, 8), 64, 64)
    with pytest.raises(BankTooLargeForImage):
        build_bank(FilterParams(1, 16, 2), 8, 8)


# --- application -------------------------------------------------------------

def test_constant_plane_responses_vanish():
    plane = np.full((32, 24), 7.5)
    for r in apply_bank(plane, build_bank(WIDE, 24, 32)):
        assert np.abs(r.even).max() <= 1e-9 * 7.5
        assert np.abs(r.odd).max() <= 1e-9 * 7.5


def test_apply_bank_covers_all_pairs():
    resp = apply_bank(np.random.default_rng(0).random((16, 16)), build_bank(WIDE, 16, 16))
    assert [(r.scale, r.orientation) for r in resp] == [(s, o) for s in range(3) for o in range(4)]
    for r in resp:
        assert r.even.shape == r.odd.shape == (16, 16)
        assert np.all(np.isfinite(r.even)) and np.all(np.isfinite(r.odd))


def test_impulse_matches_direct_dft():
    plane = np.zeros((16, 16))
    plane[5, 9] = 1.0
    bank = build_bank(SMALL, 16, 16)
    for r in apply_bank(plane, bank):
        ref = direct_filter(plane, bank.transfer(r.scale, r.orientation))
        assert np.abs(r.even - ref.real).max() <= 1e-9
        assert np.abs(r.odd - ref.imag).max() <= 1e-9


def test_even_odd_symmetry_of_impulse_response():
    # real part of the kernel is point-symmetric, imaginary part antisymmetric
    plane = np.zeros((17, 17))
    plane[8, 8] = 1.0
    for r in apply_bank(plane, build_bank(SMALL, 17, 17)):
        np.testing.assert_allclose(r.even, r.even[::-1, ::-1], atol=1e-12)
        np.testing.assert_allclose(r.odd, -r.odd[::-1, ::-1], atol=1e-12)


def test_linearity_under_positive_scaling():
    rng = np.random.default_rng(1)
    plane = rng.random((20, 24))
    bank = build_bank(WIDE, 24, 20)
    base = apply_bank(plane, bank)
    for k in (1e-3, 0.7, 3.0, 2.5e4):
        for r0, r1 in zip(base, apply_bank(k * plane, bank)):
            scale = np.abs(r0.even).max() + np.abs(r0.odd).max()
            assert np.abs(r1.even - k * r0.even).max() <= 1e-12 * k * scale
            assert np.abs(r1.odd - k * r0.odd).max() <= 1e-12 * k * scale


def test_apply_bank_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        apply_bank(np.ones((16, 16)), build_bank(SMALL, 16, 17))


# --- phase -------------------------------------------------------------------

@pytest.mark.parametrize("odd, even, expected", [
    (1.0, 0.0, math.pi / 2),
    (0.0, 1.0, 0.0),
    (1.0, 1.0, math.pi / 4),
    (0.0, 0.0, 0.0),
    (0.0, -1.0, math.pi),
    (-1.0, 0.0, -math.pi / 2),
])
def test_local_phase_examples(odd, even, expected):
    ph = local_phase((np.array([even]), np.array([odd])))
    assert ph[0] == pytest.approx(expected, abs=1e-15)
    if not (odd == 0 and even <= 0):
        assert ph[0] == pytest.approx(half_angle_atan2(odd, even), abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_local_phase_matches_half_angle_formula(odd, even):
    ph = local_phase((np.array([even]), np.array([odd])))[0]
    assert -math.pi < ph <= math.pi
    if math.hypot(odd, even) > 1e-300 and not (odd == 0 and even < 0):
        d = (ph - half_angle_atan2(odd, even) + math.pi) % (2 * math.pi) - math.pi
        assert abs(d) <= 1e-12


def test_phase_from_sums_classes():
    even = np.array([1.0, -1.0, 0.0, 0.0, 0.0])
    odd = np.array([0.0, 0.0, 1.0, -1.0, 0.0])
    np.testing.assert_array_equal(phase_from_sums(even, odd), [math.pi / 2, -math.pi / 2, 0, 0, 0])


def test_lwmpa_bright_horizontal_line():
    plane = np.full((64, 64), 0.1)
    plane[32, :] = 1.0
    for params in (SMALL, FilterParams(2, 8, 8)):
        ph = lwmpa(plane, params)
        assert np.all(np.abs(ph[32] - math.pi / 2) < 0.5)


def test_lwmpa_constant_plane_is_zero():
    assert np.all(lwmpa(np.full((16, 16), 3.0), SMALL) == 0.0)
    assert np.all(lwmpa(np.zeros((16, 16)), SMALL) == 0.0)


def test_lwmpa_scale_invariance():
    rng = np.random.default_rng(2)
    plane = rng.random((24, 24))
    base = lwmpa(plane, SMALL)
    for k in np.exp(rng.uniform(-10, 10, 20)):
        other = lwmpa(k * plane, SMALL)
        assert np.abs(other - base).max() <= 1e-9
        np.testing.assert_array_equal(other > 0, base > 0)


@pytest.mark.parametrize("seed", range(5))
def test_lwmpa_matches_direct_dft_composition(seed):
    rng = np.random.default_rng(seed)
    plane = rng.random((16, 16))
    bank = build_bank(SMALL, 16, 16)
    centered = (plane - plane.mean()) / np.ptp(plane)
    sum_e = np.zeros((16, 16))
    sum_o = np.zeros((16, 16))
    for s in range(SMALL.nscale):
        for o in range(SMALL.norient):
            r = direct_filter(centered, bank.transfer(s, o))
            sum_e += r.real
            sum_o += r.imag
    expected = np.arctan2(sum_e, np.abs(sum_o))
    assert np.abs(lwmpa(plane, SMALL) - expected).max() <= 1e-9


def test_lwmpa_deterministic():
    plane = np.random.default_rng(3).random((40, 30))
    assert lwmpa(plane, WIDE).tobytes() == lwmpa(plane, WIDE).tobytes()


def test_lwmpa_offset_does_not_change_binary_map():
    plane = np.random.default_rng(4).random((32, 32))
    base = lwmpa(plane, SMALL) > 0
    for c in (-50.0, 3.0, 1e3):
        np.testing.assert_array_equal(lwmpa(plane + c, SMALL) > 0, base)


def test_step_edge_centre_is_step_class():
    hdr = render_scene(SyntheticScene("step_edge", 64, 64, 100.0))
    ph = lwmpa(hdr.g, SMALL)
    assert np.all(np.abs(ph[:, 32]) < 0.3)
    assert np.all(np.abs(ph[:, 0]) < 0.3)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_phase_range_property(seed):
    rng = np.random.default_rng(seed)
    h, w = rng.integers(8, 33, size=2)
    plane = rng.standard_normal((h, w)) * 10 ** rng.uniform(-5, 5)
    ph = lwmpa(plane, SMALL)
    assert np.all(np.isfinite(ph))
    assert np.all(ph > -math.pi) and np.all(ph <= math.pi)


def test_phase_range_ten_thousand_planes():
    rng = np.random.default_rng(10_000)
    lo, hi = math.inf, -math.inf
    for _ in range(10_000):
        h, w = rng.integers(8, 17, size=2)
        ph = lwmpa(rng.standard_normal((h, w)) * 10 ** rng.uniform(-5, 5), SMALL)
        lo, hi = min(lo, ph.min()), max(hi, ph.max())
    assert -math.pi / 2 <= lo and hi <= math.pi / 2
