import numpy as np
import pytest

from opwave.band import (SignalField, bin_indices, coset_labels, dual_bin_lattice,
                         sample_function, sample_spacing)
from opwave.errors import IncommensurateGrid, NoConvergence, ScaleRejected
from opwave.splines import m_values
from opwave.transform import (analyze, approximation_error, atom, build_system,
                              signal_spacing, synthesize)

from conftest import make

SYSTEMS = {
    "matern1d": ("matern:nu=1", "2", -3, 0, 64),
    "laplacian2I": ("laplacian:m=1", "2I", -2, 0, 32),
    "matern_quincunx": ("matern:nu=1.5", "quincunx", -4, -1, 32),
}


@pytest.fixture(scope="module", params=sorted(SYSTEMS))
def system(request):
    text, dil, jmin, jmax, n = SYSTEMS[request.param]
    op, D = make(text, dil)
    sy = build_system(op, D, jmin, jmax, N=32)
    return sy, n


def random_signal(sy, n, rng):
    return SignalField(rng.standard_normal((n,) * sy.D.d), signal_spacing(sy))


def test_sample_spacing():
    _, D = make("matern:nu=1.5", "quincunx")
    assert sample_spacing(D, -2) == 0.5
    assert sample_spacing(D, 0) == 1.0
    with pytest.raises(IncommensurateGrid):
        sample_spacing(D, -1)
    _, D1 = make("matern:nu=1", "2", 1)
    assert sample_spacing(D1, -3) == 0.125


def test_coset_labels_partition():
    _, D = make("matern:nu=1.5", "quincunx")
    h = sample_spacing(D, -2)
    lab0 = coset_labels(D, -2, 16, h)
    assert np.all(lab0 >= 0)
    assert np.sum(lab0 == 0) == np.sum(lab0 == 1) == 128
    lab1 = coset_labels(D, -1, 16, h)
    assert np.array_equal(lab1 >= 0, lab0 == 0)


def test_dual_bin_lattice_is_integer():
    _, D = make("laplacian:m=1", "2I")
    Q = dual_bin_lattice(D, 0, 32, 0.25)
    assert np.array_equal(Q, 8 * np.eye(2))
    with pytest.raises(IncommensurateGrid):
        dual_bin_lattice(D, 1, 6, 0.25)


def test_build_system_rejects_helmholtz_coarse_scale():
    op, D = make("helmholtz", "2I")
    sy = build_system(op, D, -2, 0, N=16)
    assert [s.j for s in sy.scales] == [-2, -1, 0]
    with pytest.raises(ScaleRejected) as err:
        build_system(op, D, -1, 1, N=16)
    assert err.value.scale == 1


def test_critical_sampling(system):
    sy, n = system
    p = analyze(SignalField(np.zeros((n,) * sy.D.d), signal_spacing(sy)), sy)
    det = sy.D.det_abs
    total = n ** sy.D.d
    for j in range(sy.j_min, sy.j_max + 1):
        count = sum(p.coeffs[k].size for k in p.keys() if k[0] == j)
        assert count * det ** (j - sy.j_min + 1) == total * (det - 1)
    assert p.count() == total
    assert np.all(p.vector() == 0)


def test_linearity(system, rng):
    sy, n = system
    s, t = random_signal(sy, n, rng), random_signal(sy, n, rng)
    a = 1.7
    lhs = analyze(SignalField(a * s.values + t.values, s.h), sy).vector()
    rhs = a * analyze(s, sy).vector() + analyze(t, sy).vector()
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))


def test_round_trip_and_projection(system, rng):
    sy, n = system
    s = random_signal(sy, n, rng)
    p = analyze(s, sy)
    r = synthesize(p, sy)
    assert r.meta["iterations"] <= 200
    assert np.linalg.norm(r.values - s.values) / np.linalg.norm(s.values) < 1e-6
    r2 = synthesize(analyze(r, sy), sy)
    assert np.linalg.norm(r2.values - r.values) / np.linalg.norm(r.values) < 1e-8


def test_zero_pyramid(system):
    sy, n = system
    p = analyze(SignalField(np.zeros((n,) * sy.D.d), signal_spacing(sy)), sy)
    out = synthesize(p, sy)
    assert np.all(out.values == 0)


def test_unit_coefficient_gram_column(system):
    sy, n = system
    p = analyze(SignalField(np.zeros((n,) * sy.D.d), signal_spacing(sy)), sy)
    key = (sy.j_max, 1)
    idx = 1
    p.coeffs[key][idx] = 1.0
    col = analyze(atom(p, sy), sy)
    # Gram entries from the filters directly: sum_xi g_a g_b e^{i xi (x_a - x_b)} / n^d
    from opwave.transform import _plan
    plan = _plan(sy, n)
    d = sy.D.d
    pos = np.array(np.unravel_index(p.positions[key][idx], (n,) * d))
    q = bin_indices(n, d)
    for other in [key, (sy.j_min, 1)]:
        g = plan.filters[sy.j_max].reshape(-1) * plan.filters[other[0]].reshape(-1)
        for slot in (0, idx, 3):
            x = np.array(np.unravel_index(p.positions[other][slot], (n,) * d))
            want = np.real(np.sum(g * np.exp(2j * np.pi * q @ (x - pos) / n))) / n ** d
            assert col.coeffs[other][slot] == pytest.approx(want, abs=1e-10)
    assert abs(col.coeffs[key][idx]) > 0.1


def test_coarse_atom_is_orthogonal_to_wavelets(system):
    sy, n = system
    p = analyze(SignalField(np.zeros((n,) * sy.D.d), signal_spacing(sy)), sy)
    p.coarse[0] = 1.0
    out = analyze(atom(p, sy), sy)
    wav = np.concatenate([out.coeffs[k] for k in out.keys()])
    # exact up to the 1e-10 relative tolerance of the lattice sums in the filters
    assert np.max(np.abs(wav)) < 1e-10
    assert out.coarse[0] == pytest.approx(1.0, abs=1e-10)


def test_frame_bounds(system, rng):
    sy, n = system
    lo = min(1.0, min(s.normalization ** 2 * s.report.lambda_min for s in sy.scales))
    hi = max(1.0, max(s.normalization ** 2 * s.report.Lambda_max for s in sy.scales))
    for _ in range(100):
        s = random_signal(sy, n, rng)
        ratio = np.sum(analyze(s, sy).vector() ** 2) / np.sum(s.values ** 2)
        assert lo * (1 - 1e-9) <= ratio <= hi * (1 + 1e-9)


def test_spacing_mismatch(system):
    sy, n = system
    bad = SignalField(np.zeros((n,) * sy.D.d), 2 * signal_spacing(sy))
    with pytest.raises(IncommensurateGrid):
        analyze(bad, sy)
    with pytest.raises(IncommensurateGrid):
        analyze(SignalField(np.zeros((6,) * sy.D.d), signal_spacing(sy)), sy)


def test_no_convergence_reports_residual(rng):
    op, D = make("matern:nu=1", "2", 1)
    sy = build_system(op, D, -2, 0, N=32)
    p = analyze(random_signal(sy, 32, rng), sy)
    with pytest.raises(NoConvergence) as err:
        synthesize(p, sy, tol=1e-14, max_iter=2)
    assert err.value.residual > 1e-14


@pytest.mark.parametrize("text", ["matern:nu=1", "matern:nu=2"])
def test_passband_energy_bounded_by_projection_error(text):
    op, D = make(text, "2", 1)
    sy = build_system(op, D, -3, 0, N=32)
    n, h = 256, signal_spacing(sy)
    x = np.arange(n) * h
    for f in (1, 3, 8):
        w0 = 2 * np.pi * f / (n * h)
        s = SignalField(np.cos(w0 * x), h)
        p = analyze(s, sy)
        for sd in sy.scales[:-1]:
            energy = p.scale_energy(sd.j) / np.sum(s.values ** 2)
            gap = 1 - m_values(op, D, sd.j + 1, [[w0]])[0]
            # W_{j+1} energy <= upper bound * distance of the tone to V_{j+1}
            assert energy <= sd.normalization ** 2 * sd.report.Lambda_max * gap
        assert p.scale_energy(-3) < 0.03 * np.sum(p.vector() ** 2)


def gaussian(n, h, d):
    return sample_function(lambda x: np.exp(-0.5 * np.sum(x * x, axis=1)), n, h, d)


def test_approximation_error_monotone():
    op, D = make("matern:nu=1", "2", 1)
    f = gaussian(1024, 1 / 16, 1)
    for method in ("projection", "multiplier"):
        errs = [approximation_error(f, op, D, j, method) for j in (1, 0, -1, -2, -3)]
        assert all(a >= b for a, b in zip(errs, errs[1:]))
    # the projection error is the smaller of the two
    for j in (0, -2):
        assert approximation_error(f, op, D, j) <= approximation_error(f, op, D, j, "multiplier")


def test_approximation_error_of_element():
    # with a high order the alias tail outside the FFT band is negligible
    op, D = make("matern:nu=4", "2", 1)
    n, h = 512, 1 / 16
    f = SignalField(np.zeros(n), h)
    xi = f.frequencies()[:, 0]
    L = (1 + xi ** 2) ** 2
    c = 1 + 0.5 * np.cos(xi) + 0.2 * np.sin(2 * xi)  # 2 pi periodic: V_0 coefficients
    F = c / L
    f = SignalField(np.real(np.fft.ifft(F / h)), h)
    assert approximation_error(f, op, D, 0) < 1e-6 * f.norm()
    assert approximation_error(f, op, D, 1) > 1e-3 * f.norm()
