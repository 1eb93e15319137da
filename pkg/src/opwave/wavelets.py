"""Operator-like wavelets: spectra, coset energies, Gramian eigenvalues,
Riesz-basis certification and orthogonality checks.

The wavelet at scale ``j`` is ``psi_{j+1} = L* phi_j`` with ``phi_j`` the
cardinal interpolant, i.e.

    psi_{j+1}^(w) = |det D|^j / (L(w) S_j(w)),   S_j = sum_k |L(w + 2 pi (D^T)^{-j} k)|^{-2}.

Its ``|det D| - 1`` generators are the shifts ``psi_{j+1}(. - D^j e_m)``,
``m >= 1``.
"""

from dataclasses import dataclass, field
import itertools

import numpy as np

from .errors import SingularSample
from .lattice import frequency_grid, reduce_to_domain
from .localization import localization_available, make_localization
from .periodization import shell_sum
from .splines import (
    DEFAULT_TOL,
    SpectralField,
    bspline_values,
    interpolant_values,
    power_sum,
)
from .symbols import evaluate_symbol

ZERO_TOL = 1e-9
COLLAPSE = 1e-12


def wavelet_normalization(r, d, D, j):
    """Factor ``|det D|^{(r/d - 1/2) j}`` that makes the bounds scale-uniform."""
    det = D.det_abs if hasattr(D, "det_abs") else abs(D)
    return float(det) ** ((r / d - 0.5) * j)


def wavelet_values(op, D, j, points, tol=DEFAULT_TOL, formula="adjoint"):
    """``psi_{j+1}^`` at points.

    ``formula="adjoint"`` uses ``conj(L) * interpolant``; ``"inverse"`` uses
    ``|det D|^j L^{-1} / S_j`` and fails on the zero set.
    """
    pts = np.atleast_2d(points)
    L = evaluate_symbol(op, pts)
    if formula == "adjoint":
        return np.conj(L) * interpolant_values(op, D, j, pts, tol)
    if formula == "inverse":
        if np.any(L == 0):
            raise SingularSample("wavelet inverse formula evaluated on the zero set")
        S = power_sum(op, D, j, pts, 1, tol)
        # 1/S = smin^P / acc
        return float(D.det_abs) ** j * S.smin ** S.power / (S.acc * L)
    raise ValueError(f"unknown formula {formula!r}")


def wavelet_spectrum(op, D, j, grid, tol=DEFAULT_TOL, formula="adjoint"):
    vals = wavelet_values(op, D, j, grid.points, tol, formula)
    return SpectralField(vals.reshape(grid.shape), grid, "wavelet",
                         lambda p: wavelet_values(op, D, j, p, tol, formula), tol=tol)


@dataclass
class CosetEnergies:
    """``c[m]`` sampled on a grid of the scale-``(j+1)`` fundamental domain."""

    c: np.ndarray  # (|det D|, points)
    grid: object
    j: int
    op: object = field(repr=False, default=None)
    D: object = field(repr=False, default=None)
    method: str = "closed"

    @property
    def count(self):
        return self.c.shape[0]


def coset_points(D, j, points, m):
    return np.atleast_2d(points) + D.coset_shift(j, m)


def coset_energies(op, D, j, grid=None, tol=DEFAULT_TOL, method="closed", N=64, loc=None):
    """Coset energies ``c(m; w)``.

    ``method``:

    * ``closed``: ``|det D|^{j-1} / S_j(w + shift_m)``;
    * ``direct``: ``|det D|^{-j-1} sum_k |psi^(w + shift_m + beta_k)|^2`` by
      explicit lattice summation of the wavelet spectrum (slow reference);
    * ``localized``: ``|det D|^{j-1} |L_d|^2 / sum_k |phi_j|^2``, which needs a
      localization at scale ``j``.
    """
    grid = grid if grid is not None else frequency_grid(D, j + 1, N)
    det = D.det_abs
    out = np.empty((det, len(grid.points)))
    for m in range(det):
        x = coset_points(D, j, grid.points, m)
        if method == "closed":
            S = power_sum(op, D, j, x, 1, tol)
            out[m] = float(det) ** (j - 1) * S.smin ** S.power / S.acc
        elif method == "direct":
            S = power_sum(op, D, j, x, 1, tol)
            inv_s = S.smin ** S.power / S.acc
            terms = [(c * float(det) ** (2 * j) * inv_s ** 2, q)
                     for c, q in op.asymptotic_inverse(1)]
            def energy(y):
                vals = wavelet_values(op, D, j, y.reshape(-1, D.d), tol)
                return np.abs(vals.reshape(y.shape[:2])) ** 2

            total = shell_sum(energy, D.dual_basis(j), x, terms, tol)
            out[m] = float(det) ** (-j - 1) * total
        elif method == "localized":
            lc = loc if loc is not None else make_localization(op, D, j)
            S = power_sum(op, D, j, x, 1, tol)
            loc2 = np.abs(lc.evaluate(x)) ** (2.0 / op.power)
            # |L_d|^2 / (|L_d|^2 S) written with the normalized sum
            num = loc2 ** S.power
            den = S.acc * (loc2 / S.smin) ** S.power
            with np.errstate(invalid="ignore", divide="ignore"):
                out[m] = float(det) ** (j - 1) * num / den
        else:
            raise ValueError(f"unknown method {method!r}")
    return CosetEnergies(out, grid, j, op, D, method)


def _exponent_table(D):
    """``x[m, k] = e_k . (D^T)^{-1} e_m``."""
    E = np.array(D.cosets, dtype=float)
    Dt_inv = np.linalg.inv(D.matrix.T)
    return E @ Dt_inv.T @ E.T


def h_matrix(D):
    """Unitary ``H[m, l] = |det D|^{-1/2} exp(2 pi i e_l . (D^T)^{-1} e_m)``."""
    return np.exp(2j * np.pi * _exponent_table(D)) / np.sqrt(D.det_abs)


def gramian(ce, form="factor"):
    """Per-point Gramians ``(P, n, n)`` with ``n = |det D| - 1``.

    ``element`` sums ``c(m) exp(-2 pi i (e_k - e_l) . (D^T)^{-1} e_m)``;
    ``factor`` assembles ``|det D| H0^* diag(c) H0``.
    """
    D = ce.D
    det = D.det_abs
    c = ce.c.T  # (P, det)
    X = _exponent_table(D)
    if form == "element":
        ks = np.arange(1, det)
        # phase[m, k, l] = exp(-2 pi i (x[m,k] - x[m,l]))
        phase = np.exp(-2j * np.pi * (X[:, ks][:, :, None] - X[:, ks][:, None, :]))
        return np.einsum("pm,mkl->pkl", c, phase)
    if form == "factor":
        H0 = h_matrix(D)[:, 1:]
        return det * np.einsum("mk,pm,ml->pkl", np.conj(H0), c, H0)
    raise ValueError(f"unknown form {form!r}")


@dataclass
class GramianExtremes:
    lambda_field: np.ndarray
    Lambda_field: np.ndarray
    lambda_min: float
    Lambda_max: float
    lower_constant: float

    def __getitem__(self, key):
        return getattr(self, key)


def gramian_extremes(ce, form="factor"):
    """Eigenvalue extremes of the Gramian at every grid point.

    ``lower_constant`` is the measured ``min lambda / (|det D| * second
    smallest c)`` (the constant of the lower bound in terms of all but one
    coset energy).
    """
    G = gramian(ce, form)
    G = 0.5 * (G + np.conj(np.swapaxes(G, 1, 2)))
    ev = np.linalg.eigvalsh(G)
    lam, Lam = ev[:, 0], ev[:, -1]
    det = ce.D.det_abs
    srt = np.sort(ce.c, axis=0)
    second = srt[1] if det > 1 else srt[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = lam / (det * second)
    ratio = ratio[np.isfinite(ratio)]
    C = float(np.min(ratio)) if ratio.size else float("nan")
    return GramianExtremes(lam, Lam, float(np.min(lam)), float(np.max(Lam)), C)


def sandwich_violation(ce, ext):
    """Largest violation of ``|det| min c <= lambda <= Lambda <= |det| max c``."""
    det = ce.D.det_abs
    lo = det * np.min(ce.c, axis=0)
    hi = det * np.max(ce.c, axis=0)
    scale = np.maximum(hi, 1e-300)
    v1 = (lo - ext.lambda_field) / scale
    v2 = (ext.Lambda_field - hi) / scale
    return float(max(np.max(v1), np.max(v2), 0.0))


# --- zero-set intersection ---------------------------------------------------

def _lattice_vectors_near(basis, shift, radius):
    """All ``shift + B k`` with norm ``<= radius``."""
    d = basis.shape[0]
    smin = np.min(np.linalg.svd(basis, compute_uv=False))
    kmax = int(np.ceil((radius + np.linalg.norm(shift)) / smin)) + 1
    rng = np.arange(-kmax, kmax + 1)
    K = np.array(list(itertools.product(rng, repeat=d)), dtype=float)
    v = shift + K @ basis.T
    return v[np.linalg.norm(v, axis=1) <= radius + ZERO_TOL]


def zero_loci(op, D, j):
    """Per-coset zero loci: the zero set shifted by ``-shift_m`` and reduced
    into the fundamental domain of ``2 pi (D^T)^{-j} Z^d``."""
    zs = op.zero_set
    basis = D.dual_basis(j)
    loci = []
    for m in range(D.det_abs):
        sh = D.coset_shift(j, m)
        pts = [reduce_to_domain(np.asarray(p, float) - sh, basis)[0].tolist() for p in zs.points]
        sph = [{"center": reduce_to_domain(np.asarray(c, float) - sh, basis)[0].tolist(),
                "radius": float(rho)} for c, rho in zs.spheres]
        loci.append({"coset": m, "points": pts, "spheres": sph})
    return loci


def zero_overlap(op, D, j, tol=ZERO_TOL):
    """Whether ``N^(0)`` meets some ``N^(m)``, ``m >= 1``.

    ``N^(m) = N - shift_m + Lambda_j``, so an intersection exists iff a
    difference of two zeros lies in ``-shift_m + Lambda_j``.  Points and
    spheres make the test exact up to ``tol``.
    """
    zs = op.zero_set
    if zs.empty:
        return False, []
    basis = D.dual_basis(j)
    # difference sets as (kind, center, r_lo, r_hi)
    diffs = []
    P = [np.asarray(p, float) for p in zs.points]
    Sph = [(np.asarray(c, float), float(r)) for c, r in zs.spheres]
    for a in P:
        for b in P:
            diffs.append((a - b, 0.0, 0.0))
        for c, r in Sph:
            diffs.append((c - a, r, r))
            diffs.append((a - c, r, r))
    for c1, r1 in Sph:
        for c2, r2 in Sph:
            diffs.append((c1 - c2, abs(r1 - r2), r1 + r2))
    hits = []
    for m in range(1, D.det_abs):
        sh = -D.coset_shift(j, m)
        for center, rlo, rhi in diffs:
            radius = np.linalg.norm(center) + rhi
            for v in _lattice_vectors_near(basis, sh, radius):
                dist = np.linalg.norm(v - center)
                if rlo - tol <= dist <= rhi + tol:
                    hits.append({"coset": m, "vector": v.tolist()})
                    break
    return bool(hits), hits


# --- certification -----------------------------------------------------------

@dataclass
class RieszReport:
    j: int
    lambda_min: float
    Lambda_max: float
    zero_overlap: bool
    loci: list
    normalization: float
    verdict: str
    reasons: list
    lower_constant: float
    localization: bool
    grid_N: int
    overlap_hits: list = field(default_factory=list)

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_dict(self):
        return {
            "scale": self.j,
            "lambda_min": self.lambda_min,
            "Lambda_max": self.Lambda_max,
            "zero_overlap": self.zero_overlap,
            "overlap_hits": self.overlap_hits,
            "zero_loci": self.loci,
            "normalization": self.normalization,
            "lower_constant": self.lower_constant,
            "localization_available": self.localization,
            "grid": self.grid_N,
            "verdict": self.verdict,
            "reasons": list(self.reasons),
        }


def riesz_basis_test(op, D, j, N=64, tol=DEFAULT_TOL):
    """Certify that the scale-``j`` wavelets generate a Riesz basis.

    Pass requires a localization at scale ``j`` (spline admissibility), no
    zero-locus overlap and ``lambda_min > 1e-12 Lambda_max`` on the grid.
    Failures are reported, never raised.
    """
    reasons = []
    has_loc = localization_available(op, D, j)
    if not has_loc:
        reasons.append("no_localization")
    overlap, hits = zero_overlap(op, D, j)
    if overlap:
        reasons.append("zero_overlap")
    ce = coset_energies(op, D, j, frequency_grid(D, j + 1, N), tol)
    ext = gramian_extremes(ce)
    if not ext.lambda_min > COLLAPSE * ext.Lambda_max:
        reasons.append("lambda_min_collapse")
    norm = wavelet_normalization(op.order, op.d, D, j)
    return RieszReport(int(j), ext.lambda_min, ext.Lambda_max, overlap, zero_loci(op, D, j),
                       norm, "fail" if reasons else "pass", reasons, ext.lower_constant,
                       has_loc, int(N), hits)


# --- orthogonality -----------------------------------------------------------

def default_shifts(D, radius=2):
    """Integer ``k`` with ``|k|_inf <= radius`` and ``k`` not in ``D Z^d``."""
    Dinv = np.linalg.inv(D.matrix)
    out = []
    for k in itertools.product(range(-radius, radius + 1), repeat=D.d):
        u = Dinv @ np.array(k, float)
        if np.any(np.abs(u - np.round(u)) > 1e-9):
            out.append(k)
    return out


def orthogonality_residual(op, D, j, N=64, shifts=None, tol=DEFAULT_TOL, details=False):
    """``max_k |<phi_{j+1}, psi_{j+1}(. - D^j k)>| / (|phi_{j+1}| |psi_{j+1}|)``.

    ``phi_{j+1}`` is the B-spline of the coarser scale.  The inner products
    are spectral quadratures over one fundamental domain of
    ``2 pi (D^T)^{-j} Z^d`` of the alias sum of ``phi^ conj(psi^)``, computed
    by explicit lattice summation of the product.
    """
    shifts = default_shifts(D) if shifts is None else shifts
    loc = make_localization(op, D, j + 1, strict=False)
    grid = frequency_grid(D, j, N)
    pts = grid.points
    det = float(D.det_abs)
    S = power_sum(op, D, j, pts, 1, tol)
    inv_s = S.smin ** S.power / S.acc
    lw = loc.evaluate(pts)
    terms = [(c * det ** j * lw * inv_s, q) for c, q in op.asymptotic_inverse(1)]

    def product(x):
        # S_j is periodic, so psi^ at w + beta is |det|^j / (L(w + beta) S_j(w))
        flat = x.reshape(-1, D.d)
        phi = bspline_values(op, loc, flat).reshape(x.shape[:2])
        L = evaluate_symbol(op, flat).reshape(x.shape[:2])
        return phi * np.conj(det ** j * inv_s[:, None] / L)

    F = shell_sum(product, grid.basis, pts, terms, tol)
    w = grid.cell_volume / (2 * np.pi) ** D.d
    # norms: sum_k |phi_{j+1}|^2 over 2 pi (D^T)^{-j} Z^d is |L_d|^2 S_j
    loc2 = np.abs(lw) ** (2.0 / op.power)
    phi2 = np.sum(S.acc * (loc2 / S.smin) ** S.power) * w
    psi2 = np.sum(det ** (2 * j) * inv_s) * w
    Dj = D.lattice_basis(j)
    res = {}
    for k in shifts:
        x = Dj @ np.array(k, float)
        val = np.sum(F * np.exp(1j * pts @ x)) * w
        res[tuple(int(v) for v in k)] = abs(val) / np.sqrt(phi2 * psi2)
    worst = max(res.values()) if res else 0.0
    return (worst, res) if details else worst


@dataclass
class ScaleData:
    j: int
    report: RieszReport
    normalization: float


@dataclass
class WaveletSystem:
    """Certified wavelet scales ``j_min..j_max`` plus the coarse space ``V_{j_max+1}``."""

    op: object
    D: object
    j_min: int
    j_max: int
    scales: list
    tol: float = DEFAULT_TOL

    @property
    def coarse_scale(self):
        return self.j_max + 1

    def normalization(self, j):
        return wavelet_normalization(self.op.order, self.op.d, self.D, j)
