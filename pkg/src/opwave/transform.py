"""Multiscale analysis, CG synthesis and the approximation-error functional.

Signal model: the samples ``s_p`` of a :class:`~opwave.band.SignalField`
are the coefficients of ``s = sum_p s_p phi_o(. - h p)`` where ``phi_o`` is
the orthonormalized generator of the finest space ``V_{j_min}``
(``phi_o^ = |det D|^{j/2} / (L sqrt(S_j))``).  Every analysis filter is then a
ratio of periodized sums and is evaluated exactly on the FFT bins; the box
is periodic.
"""

from dataclasses import dataclass, field

import numpy as np

from .band import (SignalField, bin_indices, check_box, class_labels, coset_labels,
                   dual_bin_lattice, sample_spacing)
from .errors import IncommensurateGrid, NoConvergence, ScaleRejected
from .splines import DEFAULT_TOL, m_values, power_sum
from .symbols import evaluate_symbol
from .wavelets import ScaleData, WaveletSystem, riesz_basis_test

CG_MAX_ITER = 500


def build_system(op, D, j_min, j_max, N=64, tol=DEFAULT_TOL):
    """Certify scales ``j_min..j_max`` and assemble the system.

    Raises :class:`ScaleRejected` naming the first scale that fails.
    """
    if j_min > j_max:
        raise ValueError("j_min must not exceed j_max")
    scales = []
    for j in range(j_min, j_max + 1):
        rep = riesz_basis_test(op, D, j, N=N, tol=tol)
        if not rep.passed:
            raise ScaleRejected(j, ", ".join(rep.reasons))
        scales.append(ScaleData(j, rep, rep.normalization))
    return WaveletSystem(op, D, j_min, j_max, scales, tol)


@dataclass
class Pyramid:
    """Wavelet coefficients per ``(scale, coset)`` plus the coarse row.

    ``positions`` hold flat sample indices (row-major) of each coefficient's
    lattice point.
    """

    coeffs: dict
    coarse: np.ndarray
    positions: dict
    coarse_positions: np.ndarray
    shape: tuple
    h: float
    j_min: int
    j_max: int
    provenance: dict = field(default_factory=dict)

    def keys(self):
        return sorted(self.coeffs)

    def count(self):
        return sum(v.size for v in self.coeffs.values()) + self.coarse.size

    def vector(self):
        return np.concatenate([self.coeffs[k] for k in self.keys()] + [self.coarse])

    def with_vector(self, v):
        v = np.asarray(v, dtype=float)
        out, at = {}, 0
        for k in self.keys():
            size = self.coeffs[k].size
            out[k] = v[at:at + size].copy()
            at += size
        return Pyramid(out, v[at:].copy(), self.positions, self.coarse_positions, self.shape,
                       self.h, self.j_min, self.j_max, dict(self.provenance))

    def zeros_like(self):
        return self.with_vector(np.zeros(self.count()))

    def scale_energy(self, j):
        return float(sum(np.sum(v ** 2) for (s, _), v in self.coeffs.items() if s == j))


def _sum_ratio(Sa, alpha, Sb, beta):
    """``S_a^alpha / S_b^beta`` for sums on nested lattices (``S_b`` finer),
    with the limits at common zeros filled in."""
    p = Sa.power
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (Sa.acc ** alpha / Sb.acc ** beta) * Sb.smin ** (p * beta) / Sa.smin ** (p * alpha)
    both = (Sa.smin == 0) & (Sb.smin == 0)
    lim = Sa.acc ** alpha / Sb.acc ** beta if alpha == beta else np.zeros_like(Sa.acc)
    val = np.where(both, lim, val)
    return np.where((Sb.smin == 0) & ~both, 0.0, val)


class _Plan:
    def __init__(self, system, n):
        op, D = system.op, system.D
        d = D.d
        self.system, self.n, self.d = system, n, d
        self.h = sample_spacing(D, system.j_min)
        J = system.coarse_scale
        check_box(D, J, n, self.h)
        xi = bin_indices(n, d) * (2 * np.pi / (n * self.h))
        det = float(D.det_abs)
        tol = system.tol
        base = power_sum(op, D, system.j_min, xi, 1, tol)
        shape = (n,) * d
        self.filters, self.masks = {}, {}
        for sd in system.scales:
            j = sd.j
            Sj = power_sum(op, D, j, xi, 1, tol)
            g = sd.normalization * det ** (j - system.j_min / 2) * _sum_ratio(base, 0.5, Sj, 1.0)
            self.filters[j] = g.reshape(shape)
            lab = coset_labels(D, j, n, self.h).reshape(-1)
            for m in range(1, len(D.cosets)):
                self.masks[(j, m)] = np.flatnonzero(lab == m)
        SJ = power_sum(op, D, J, xi, 1, tol)
        self.coarse_filter = (det ** ((J - system.j_min) / 2)
                              * _sum_ratio(base, 0.5, SJ, 0.5)).reshape(shape)
        self.coarse_mask = np.flatnonzero(coset_labels(D, J, n, self.h).reshape(-1) >= 0)
        weight = sum(
            (self.masks_count(j) / n ** d) * self.filters[j] ** 2 for j in self.filters)
        weight = weight + (self.coarse_mask.size / n ** d) * self.coarse_filter ** 2
        self.precond = 1.0 / weight

    def masks_count(self, j):
        return sum(v.size for (s, _), v in self.masks.items() if s == j)

    def template(self):
        coeffs = {k: np.zeros(v.size) for k, v in self.masks.items()}
        sysm = self.system
        return Pyramid(coeffs, np.zeros(self.coarse_mask.size), dict(self.masks),
                       self.coarse_mask, (self.n,) * self.d, self.h, sysm.j_min, sysm.j_max,
                       {"operator": sysm.op.label(), "dilation": sysm.D.label(), "n": self.n,
                        "h": self.h})

    def forward(self, values):
        F = np.fft.fftn(values)
        out = {}
        for j, g in self.filters.items():
            full = np.real(np.fft.ifftn(F * g)).reshape(-1)
            for m in range(1, len(self.system.D.cosets)):
                out[(j, m)] = full[self.masks[(j, m)]]
        coarse = np.real(np.fft.ifftn(F * self.coarse_filter)).reshape(-1)[self.coarse_mask]
        return out, coarse

    def adjoint(self, coeffs, coarse):
        size = self.n ** self.d
        shape = (self.n,) * self.d
        acc = np.zeros(shape, dtype=complex)
        for j, g in self.filters.items():
            up = np.zeros(size)
            for m in range(1, len(self.system.D.cosets)):
                up[self.masks[(j, m)]] = coeffs[(j, m)]
            acc += np.fft.fftn(up.reshape(shape)) * g
        up = np.zeros(size)
        up[self.coarse_mask] = coarse
        acc += np.fft.fftn(up.reshape(shape)) * self.coarse_filter
        return np.real(np.fft.ifftn(acc))

    def precondition(self, values):
        return np.real(np.fft.ifftn(np.fft.fftn(values) * self.precond))


_plans = {}


def _plan(system, n):
    key = (id(system), n)
    hit = _plans.get(key)
    if hit is None or hit.system is not system:
        if len(_plans) > 8:
            _plans.clear()
        hit = _plans[key] = _Plan(system, n)
    return hit


def _check_signal(s, plan):
    if s.values.shape != (plan.n,) * plan.d:
        raise IncommensurateGrid(f"signal shape {s.values.shape} is not a {plan.d}-d cube")
    if not np.isclose(s.h, plan.h, rtol=1e-12):
        raise IncommensurateGrid(f"signal spacing {s.h} differs from D^j_min spacing {plan.h}")


def signal_spacing(system):
    """Sample spacing required by ``system`` (raises IncommensurateGrid)."""
    return sample_spacing(system.D, system.j_min)


def analyze(s, system):
    """Coefficients ``<s, normalization * psi_{j+1}(. - x)>`` on each coset of
    ``D^j Z^d \\ D^{j+1} Z^d`` plus the coarse row on ``D^{j_max+1} Z^d``."""
    n = s.values.shape[0]
    plan = _plan(system, n)
    _check_signal(s, plan)
    p = plan.template()
    p.coeffs, p.coarse = plan.forward(s.values)
    return p


def atom(p, system):
    """``sum`` of coefficients times the analysis atoms (adjoint of analyze)."""
    plan = _plan(system, p.shape[0])
    return SignalField(plan.adjoint(p.coeffs, p.coarse), plan.h)


def synthesize(p, system, tol=DEFAULT_TOL, max_iter=CG_MAX_ITER):
    """Least-squares signal whose analysis matches ``p``.

    Preconditioned conjugate gradients on the normal equations; the stop
    test is ``|analyze(s) - p| / |p| <= tol``.
    """
    plan = _plan(system, p.shape[0])
    target = p.vector()
    norm_p = np.linalg.norm(target)
    x = np.zeros((plan.n,) * plan.d)
    if norm_p == 0:
        return SignalField(x, plan.h)
    work = p.zeros_like()

    def A(v):
        c, co = plan.forward(v)
        work.coeffs, work.coarse = c, co
        return work.vector()

    def AT(vec):
        q = p.with_vector(vec)
        return plan.adjoint(q.coeffs, q.coarse)

    e = target.copy()
    g = AT(e)
    z = plan.precondition(g)
    dvec = z
    gamma = float(np.sum(g * z))
    res = 1.0
    for it in range(1, max_iter + 1):
        q = A(dvec)
        alpha = gamma / float(np.dot(q, q))
        x = x + alpha * dvec
        e = e - alpha * q
        res = np.linalg.norm(e) / norm_p
        if res <= tol:
            out = SignalField(x, plan.h)
            out.meta["iterations"] = it
            out.meta["residual"] = float(res)
            return out
        g = AT(e)
        z = plan.precondition(g)
        gamma_new = float(np.sum(g * z))
        dvec = z + (gamma_new / gamma) * dvec
        gamma = gamma_new
    raise NoConvergence(max_iter, float(res))


def approximation_error(f, op, D, j, method="projection", tol=DEFAULT_TOL):
    """Distance from ``f`` to ``V_j`` on the signal's spectral grid.

    ``f`` is read as band-limited to its FFT band.  ``method="projection"``
    (default) returns the exact projection error
    ``|f|^2 - (2 pi)^-d sum_classes |sum_beta f^ a|^2 dw`` with
    ``a = sqrt(m_j) sgn(L)`` summed over the in-band aliases of each class;
    ``method="multiplier"`` returns
    ``((2 pi)^-d sum |f^|^2 (1 - m_j) dw)^(1/2)``.
    """
    F = f.spectrum().reshape(-1)
    xi = f.frequencies()
    w = f.frequency_cell / (2 * np.pi) ** f.d
    m = m_values(op, D, j, xi, 1, tol)
    total = float(np.sum(np.abs(F) ** 2))
    if method == "multiplier":
        return float(np.sqrt(max(w * float(np.sum(np.abs(F) ** 2 * (1 - m))), 0.0)))
    if method != "projection":
        raise ValueError(f"unknown method {method!r}")
    L = evaluate_symbol(op, xi)
    mag = np.abs(L)
    sgn = np.where(mag == 0, 1.0, L / np.where(mag == 0, 1.0, mag))
    a = np.sqrt(m) * sgn
    Q = dual_bin_lattice(D, j, f.n, f.h)
    labels = class_labels(bin_indices(f.n, f.d), Q)
    prod = F * a
    re = np.bincount(labels, weights=prod.real)
    im = np.bincount(labels, weights=prod.imag)
    captured = float(np.sum(re ** 2 + im ** 2))
    return float(np.sqrt(max(w * (total - captured), 0.0)))
