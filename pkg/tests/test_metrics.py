import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specproj.consistency import project_mixture_consistency, vjp_mixture_consistency
from specproj.core import ComplexSpectrogram, InvalidArgument, SourceSet, StftConfig


from specproj.metrics import (
    MetricsReport,
    grad_spectral_loss,
    mag_sq_error,
    power_compress,
    si_sdr,
    si_sdr_improvement,
    spectral_loss,
)

CFG1 = StftConfig(2, 1, 2, 100)


def test_si_sdr_examples():
    assert si_sdr([1.0, 0, 0], [0.5, 0.5, 0]) == 0.0


@pytest.mark.parametrize("c", [1.0, -3.0, 1e-4, 2.5e3])
def test_si_sdr_scaled_reference_is_inf(rng, c):
    x = rng.standard_normal(16000)
    assert si_sdr(x, c * x) == math.inf


def test_si_sdr_scale_invariance(rng):
    for _ in range(10):
        x, xh = rng.standard_normal(4000), rng.standard_normal(4000)
        base = si_sdr(x, xh)
        for c in (2.0, -0.1, 37.0):
            assert abs(si_sdr(x, c * xh) - base) <= 1e-9


def test_si_sdr_orthogonal_residual(rng):
    x = rng.standard_normal(1000)
    e = rng.standard_normal(1000) * 0.3
    e -= x * np.dot(x, e) / np.dot(x, x)
    expected = 10 * math.log10(np.dot(x, x) / np.dot(e, e))
    assert abs(si_sdr(x, x + e) - expected) <= 1e-9


def test_si_sdr_errors():
    with pytest.raises(InvalidArgument):
        si_sdr([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(InvalidArgument):
        si_sdr([1.0, 0.0], [1.0])


def test_si_sdr_improvement(rng):
    x, n = rng.standard_normal(500), rng.standard_normal(500)
    y = x + n
    assert si_sdr_improvement(x, y, y) == 0.0
    assert si_sdr_improvement(x, x, y) == math.inf
    est = x + 0.1 * n
    assert si_sdr_improvement(x, est, y) == pytest.approx(si_sdr(x, est) - si_sdr(x, y))


def test_power_compress_examples():
    out = power_compress(np.array([0, 1, -8], dtype=complex), 0.3)
    assert out[0] == 0 and out[1] == 1
    assert out[2].real == pytest.approx(-(8**0.3), rel=1e-12)
    assert abs(out[2].imag) < 1e-12
    assert 8**0.3 == pytest.approx(1.8661, abs=1e-4)
    with pytest.raises(InvalidArgument):
        power_compress(np.ones(2), 0.0)


def test_power_compress_polar(rng):
    z = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    np.testing.assert_allclose(power_compress(z, 0.3), np.abs(z) ** 0.3 * np.exp(1j * np.angle(z)), rtol=1e-12)


def test_spectral_loss_examples():
    X = np.zeros((2, 1, 1), dtype=complex)
    X[0] = 1.0
    E = np.zeros_like(X)
    assert spectral_loss(X, E) == pytest.approx(0.96, abs=1e-15)
    assert spectral_loss(X, X) == 0.0


def test_spectral_loss_brute_force(rng):
    X = rng.standard_normal((2, 3, 4)) + 1j * rng.standard_normal((2, 3, 4))
    E = rng.standard_normal((2, 3, 4)) + 1j * rng.standard_normal((2, 3, 4))
    total = 0.0
    for j, z in enumerate((0.8, 0.2)):
        for t in range(3):
            for f in range(4):
                a, b = X[j, t, f], E[j, t, f]
                ca = abs(a) ** 0.3 * np.exp(1j * np.angle(a))
                cb = abs(b) ** 0.3 * np.exp(1j * np.angle(b))
                total += z * ((abs(a) ** 0.3 - abs(b) ** 0.3) ** 2 + 0.2 * abs(ca - cb) ** 2)
    assert spectral_loss(X, E) == pytest.approx(total, rel=1e-12)


def test_spectral_loss_swap_sensitivity(rng):
    X = rng.standard_normal((2, 4, 5)) + 1j * rng.standard_normal((2, 4, 5))
    X[1] *= 0.1
    E = X + 0.05 * (rng.standard_normal(X.shape) + 1j * rng.standard_normal(X.shape))
    assert spectral_loss(X, E[::-1]) > spectral_loss(X, E)


def test_spectral_loss_validation():
    with pytest.raises(InvalidArgument):
        spectral_loss(np.ones((2, 1, 1)), np.ones((2, 1, 2)))
    with pytest.raises(InvalidArgument):
        spectral_loss(np.ones((2, 1, 1)), np.ones((2, 1, 1)), z=(0.5, 0.6))


def test_grad_zero_at_minimum(rng):
    X = (rng.uniform(0.5, 2, (2, 3, 3))) * np.exp(1j * rng.uniform(0, 6, (2, 3, 3)))
    assert np.max(np.abs(grad_spectral_loss(X, X))) <= 1e-9


def _fd_grad(f, E, h=1e-6):
    g = np.zeros_like(E)
    for idx in np.ndindex(E.shape):
        for unit in (1.0, 1j):
            d = np.zeros_like(E)
            d[idx] = unit * h
            val = (f(E + d) - f(E - d)) / (2 * h)
            g[idx] += val * unit
    return g


def _bounded_away(rng, shape, low=0.1):
    mag = rng.uniform(low + 0.2, 2.0, shape)
    return mag * np.exp(1j * rng.uniform(-np.pi, np.pi, shape))


def test_grad_matches_finite_differences(rng):
    X = _bounded_away(rng, (2, 3, 4))
    E = _bounded_away(rng, (2, 3, 4))
    fd = _fd_grad(lambda e: spectral_loss(X, e), E)
    an = grad_spectral_loss(X, E)
    assert np.max(np.abs(fd - an)) <= 1e-4 * np.max(np.abs(fd))
    np.testing.assert_allclose(an, fd, rtol=1e-4, atol=1e-7)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.sampled_from([0.3, 0.5, 1.0]))
def test_grad_property(seed, p):
    rng = np.random.default_rng(seed)
    X, E = _bounded_away(rng, (2, 2, 2)), _bounded_away(rng, (2, 2, 2))
    fd = _fd_grad(lambda e: spectral_loss(X, e, p=p), E)
    np.testing.assert_allclose(grad_spectral_loss(X, E, p=p), fd, rtol=1e-4, atol=1e-6)


def test_grad_finite_at_zero():
    X = np.ones((2, 1, 1), dtype=complex)
    g = grad_spectral_loss(X, np.zeros_like(X))
    assert np.all(np.isfinite(g))


def test_grad_chain_through_mixture_projection(rng):
    J, shape = 2, (1, 2)
    mix = ComplexSpectrogram(_bounded_away(rng, shape), CFG1)
    X = _bounded_away(rng, (J, *shape))
    Xh = _bounded_away(rng, (J, *shape))

    def loss(xh):
        s = SourceSet(tuple(mix.like(d) for d in xh), mix)
        return spectral_loss(X, project_mixture_consistency(s).stack())

    s = SourceSet(tuple(mix.like(d) for d in Xh), mix)
    upstream = grad_spectral_loss(X, project_mixture_consistency(s).stack())
    gx, _ = vjp_mixture_consistency(upstream)
    np.testing.assert_allclose(gx, _fd_grad(loss, Xh), rtol=1e-4, atol=1e-7)


def test_mag_sq_error_examples():
    A = ComplexSpectrogram(np.zeros((1, 2)), CFG1)
    B = A.like(np.array([[3 + 4j, 3 + 4j]]))
    assert mag_sq_error(A, A) == 0.0
    assert mag_sq_error(A, B) == 25.0
    assert mag_sq_error(np.zeros((1, 1)), np.array([[3 + 4j]])) == 25.0


def test_report_json_round_trip():
    r = MetricsReport(si_sdr_db=math.inf, loss=0.25, frames=3)
    text = r.to_json()
    assert '"si_sdr_db": "inf"' in text
    assert list(MetricsReport.from_json(text)) == ["si_sdr_db", "loss", "frames"]
    assert MetricsReport.from_json(text)["si_sdr_db"] == math.inf
    with pytest.raises(InvalidArgument):
        MetricsReport(x=math.nan).to_json()
