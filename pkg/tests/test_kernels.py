import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rotsteer import _accel, _kernels_py

try:
    from rotsteer import _kernels
except ImportError:  # extension not built
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")


def direct_sum(n_out, delays, gains, half_width):
    """Per-tap loop over the Hann-windowed sinc definition."""
    out = np.zeros((n_out, gains.shape[1]))
    for tau, g in zip(delays, gains):
        for n in range(n_out):
            x = n - tau
            if abs(x) < half_width:
                out[n] += g * np.sinc(x) * 0.5 * (1 + np.cos(np.pi * x / half_width))
    return out


def test_backend_selection():
    assert _accel.BACKEND in ("cython", "python")
    forced = bool(os.environ.get("ROTSTEER_PURE_PYTHON"))
    assert _accel.BACKEND == ("cython" if _kernels is not None and not forced else "python")


def test_python_kernel_matches_direct_sum(rng):
    delays = rng.uniform(-10, 90, 30)
    gains = rng.normal(size=(30, 4))
    out = np.zeros((80, 4))
    _kernels_py.accumulate_fractional_delays(out, delays, gains, 8)
    np.testing.assert_allclose(out, direct_sum(80, delays, gains, 8), atol=1e-12)


def test_integer_delay_is_exact_impulse():
    out = np.zeros((40, 1))
    _kernels_py.accumulate_fractional_delays(out, np.array([7.0]), np.array([[2.5]]), 16)
    expect = np.zeros((40, 1))
    expect[7] = 2.5
    np.testing.assert_allclose(out, expect, atol=1e-15)


@needs_ext
@given(st.integers(0, 2 ** 31), st.integers(1, 40), st.sampled_from([4, 16, 32]))
def test_backends_agree(seed, n_img, half_width):
    rng = np.random.default_rng(seed)
    delays = rng.uniform(-40, 300, n_img)
    delays[: n_img // 3] = np.round(delays[: n_img // 3])  # exercise integer taps
    gains = rng.normal(size=(n_img, 4))
    a, b = np.zeros((256, 4)), np.zeros((256, 4))
    _kernels_py.accumulate_fractional_delays(a, delays, gains, half_width)
    _kernels.accumulate_fractional_delays(b, delays, gains, half_width)
    np.testing.assert_allclose(a, b, atol=1e-11)


@pytest.mark.parametrize("mod", [_kernels_py, pytest.param(_kernels, marks=needs_ext)])
def test_shape_check(mod):
    with pytest.raises(ValueError):
        mod.accumulate_fractional_delays(np.zeros((10, 4)), np.zeros(3), np.zeros((3, 2)), 4)
