import dataclasses

import numpy as np
import pytest

from opwave.errors import DegenerateLowerBound, SlowDecay
from opwave.lattice import frequency_grid
from opwave.localization import make_localization
from opwave.periodization import lattice_power_sum
from opwave.splines import (SpectralField, bspline_spectrum, bspline_values, cardinal_samples,
                            interpolant_spectrum, interpolant_values, m_function, m_values,
                            periodized_power_sum, power_sum_values, riesz_bounds)

from conftest import make


def matern_sum(w):
    """sum_k 1/(1 + (w + 2 pi k)^2) in closed form."""
    return np.sinh(1.0) / (2.0 * (np.cosh(1.0) - np.cos(w)))


@pytest.fixture
def matern1d():
    op, D = make("matern:nu=1", "2", 1)
    return op, D, make_localization(op, D, 0)


def test_bspline_examples(matern1d):
    op, D, loc = matern1d
    assert bspline_values(op, loc, [[0.0]])[0] == pytest.approx(1.0)
    e, De = make("expderiv:alpha=1", "2", 1)
    v = bspline_values(e, make_localization(e, De, 0), [[np.pi]])[0]
    assert abs(v) == pytest.approx((1 + np.e) / np.sqrt(1 + np.pi ** 2), rel=1e-14)
    lap, Dl = make("laplacian:m=1", "2I")
    loc = make_localization(lap, Dl, 0)
    near = [bspline_values(lap, loc, [[r, 0.0]])[0] for r in (1e-2, 1e-4, 1e-6)]
    assert near[-1] == pytest.approx(1.0, abs=1e-10)
    g = frequency_grid(Dl, 0, 16)
    f = bspline_spectrum(lap, loc, g)
    assert f.values.shape == g.shape and np.all(np.isfinite(f.values))


def test_power_sum_closed_form(matern1d):
    op, D, loc = matern1d
    w = np.linspace(-np.pi, np.pi, 41)[:, None]
    vals, K = power_sum_values(op, loc, D, 0, w)
    assert np.max(np.abs(vals - matern_sum(w[:, 0])) / matern_sum(w[:, 0])) < 1e-10
    assert vals[20] == pytest.approx(1.08197, abs=1e-5)
    assert vals[0] == pytest.approx(0.23106, abs=1e-5)
    assert K > 0


def test_power_sum_slow_decay():
    op, D = make("matern:nu=0.51", "2", 1)
    loc = make_localization(op, D, 0)
    vals, _ = power_sum_values(op, loc, D, 0, [[0.3]], tol=1e-8)
    assert np.isfinite(vals[0])
    slow = dataclasses.replace(op, order=0.5)
    with pytest.raises(SlowDecay):
        lattice_power_sum(slow, D.dual_basis(0), np.array([[0.3]]))


def test_riesz_bounds(matern1d):
    op, D, loc = matern1d
    rb = riesz_bounds(periodized_power_sum(op, loc, D, 0, 1, frequency_grid(D, 0, 64)))
    assert rb.A == pytest.approx(matern_sum(np.pi), abs=1e-3)
    assert rb.B == pytest.approx(matern_sum(0.0), abs=1e-3)
    assert 0 < rb.A <= rb.B


def test_riesz_bounds_constant_and_degenerate():
    op, D = make("matern:nu=1", "2", 1)
    g = frequency_grid(D, 0, 16)
    c = riesz_bounds(SpectralField(np.full(g.shape, 2.5), g, "power_sum"))
    assert (c.A, c.B) == (2.5, 2.5)
    vals = np.ones(g.shape)
    vals[3] = 0.0
    with pytest.raises(DegenerateLowerBound):
        riesz_bounds(SpectralField(vals, g, "power_sum"))


def test_riesz_bounds_stable():
    op, D = make("expderiv:alpha=1", "2", 1)
    loc = make_localization(op, D, 0)
    a = riesz_bounds(periodized_power_sum(op, loc, D, 0, 1, frequency_grid(D, 0, 32)))
    b = riesz_bounds(periodized_power_sum(op, loc, D, 0, 1, frequency_grid(D, 0, 64)))
    assert a.A > 0
    assert abs(a.A - b.A) < 0.01 * b.A and abs(a.B - b.B) < 0.01 * b.B
    c = riesz_bounds(periodized_power_sum(op, loc, D, 0, 1, frequency_grid(D, 0, 64), tol=5e-11))
    assert abs(c.A - b.A) < 1e-10 and abs(c.B - b.B) < 1e-10


def test_interpolant_examples(matern1d):
    op, D, _ = matern1d
    assert interpolant_values(op, D, 0, [[0.0]])[0] == pytest.approx(1 / matern_sum(0.0), rel=1e-10)
    assert interpolant_values(op, D, 0, [[0.0]])[0] == pytest.approx(0.92424, abs=1e-5)


def _direct_periodization(op, D, j, g, K):
    total = 0
    for k in np.ndindex(*(2 * K + 1,) * D.d):
        total = total + interpolant_values(op, D, j, g.points + g.basis @ (np.array(k, float) - K))
    return total


# high orders so that a truncated direct sum is itself accurate to ~1e-12
@pytest.mark.parametrize("text,dil,d,j,K", [
    ("matern:nu=3", "2", 1, 0, 100), ("matern:nu=3", "2", 1, -2, 100),
    ("pow:base=expderiv:alpha=1,n=3", "2", 1, 1, 100),
    ("laplacian:m=4", "2I", 2, 1, 15), ("matern:nu=6", "quincunx", 2, -1, 15),
])
def test_periodization_identity(text, dil, d, j, K):
    op, D = make(text, dil, d)
    g = frequency_grid(D, j, 16)
    target = float(D.det_abs) ** j
    assert np.max(np.abs(_direct_periodization(op, D, j, g, K) - target)) / target < 1e-10
    f = interpolant_spectrum(op, D, j, g)
    m = m_function(op, D, j, 1, g)
    assert np.max(np.abs(f.values / target - m.values)) < 1e-12


def test_periodization_identity_low_order():
    op, D = make("matern:nu=1", "2", 1)
    g = frequency_grid(D, 0, 16)
    K = 2000
    err = np.max(np.abs(_direct_periodization(op, D, 0, g, K) - 1))
    # the omitted tail is about 2 sum_{k>K} (2 pi k)^-2 / S <= 1/(2 pi^2 K S_min)
    assert err < 1 / (2 * np.pi ** 2 * K * 0.23)


def test_cardinal_samples_are_a_delta():
    for text, dil, d, j in [("matern:nu=1", "2", 1, 0), ("laplacian:m=1", "2I", 2, -1)]:
        op, D = make(text, dil, d)
        s = cardinal_samples(op, D, j, N=64 if d == 1 else 32)
        delta = np.zeros_like(s)
        delta[(0,) * d] = 1
        assert np.max(np.abs(s - delta)) < 1e-8


def test_m_function_range_and_limit():
    op, D = make("matern:nu=1", "2", 1)
    g = frequency_grid(D, 0, 256)
    m1 = m_function(op, D, 0, 1, g).values
    assert np.all(m1 >= 0) and np.all(m1 <= 1)
    assert m_values(op, D, 0, [[0.0]])[0] == pytest.approx(0.92424, abs=1e-5)
    m64 = m_function(op, D, 0, 64, g).values
    w = np.abs(g.points[:, 0])
    assert np.all(np.abs(m64[w < np.pi / 2] - 1) < 0.01)
    assert np.all(m64[w < 0.9 * np.pi] > 0.99)
    outside = np.linspace(1.1 * np.pi, 3 * np.pi, 50)[:, None]
    assert np.all(m_values(op, D, 0, outside, 64) < 0.01)
    assert m_values(op, D, 0, [[np.pi]], 64)[0] == pytest.approx(0.5, abs=1e-12)


def test_partition_under_finer_lattice():
    op, D = make("matern:nu=1.5", "quincunx")
    g = frequency_grid(D, 0, 32)
    for n in (1, 3):
        total = 0
        for e in D.cosets:
            shift = 2 * np.pi * np.linalg.solve(D.matrix.T.astype(float), np.asarray(e, float))
            total = total + m_values(op, D, 1, g.points + shift, n)
        assert np.max(total) <= 1 + 1e-12


def test_laplacian_homogeneous_scaling(rng):
    op, D = make("laplacian:m=1", "2I")
    w = rng.uniform(-np.pi, np.pi, size=(50, 2))
    S0, _ = power_sum_values(op, make_localization(op, D, 0), D, 0, w)
    for j in (-1, 1, 2):
        x = w * 2.0 ** (-j)
        Sj, _ = power_sum_values(op, make_localization(op, D, j), D, j, x)
        assert np.max(np.abs(Sj - S0) / S0) < 1e-10
