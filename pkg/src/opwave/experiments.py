"""Reproduction harnesses: sparse processes, decorrelation curves,
approximation-order fits, discrete-sum bounds and sparsity statistics."""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .band import SignalField, box_frequencies
from .errors import BadParameter, DegenerateFit
from .lattice import frequency_grid, reduce_to_domain
from .periodization import shell_sum
from .splines import DEFAULT_TOL, power_sum
from .symbols import evaluate_symbol
from .transform import approximation_error

ORIGIN_GUARD = 1e-8
FAMILIES = ("gaussian", "laplace", "student_t", "compound_poisson")


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean white noise with finite variance.

    ``params``: ``dof`` (student_t, > 2), ``rate`` (compound_poisson, impulses
    per unit volume).  Amplitudes of compound Poisson impulses are standard
    normal.
    """

    family: str = "gaussian"
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise BadParameter(f"unknown noise family {self.family!r}")
        if self.family == "student_t" and not self.params.get("dof", 5.0) > 2:
            raise BadParameter("student_t needs dof > 2 for a finite variance")
        if self.family == "compound_poisson" and not self.params.get("rate", 1.0) > 0:
            raise BadParameter("compound_poisson needs rate > 0")

    def draw(self, shape, cell):
        """White-noise samples on cells of volume ``cell``."""
        rng = np.random.default_rng(self.seed)
        if self.family == "gaussian":
            w = rng.standard_normal(shape)
        elif self.family == "laplace":
            w = rng.laplace(0.0, 1.0 / np.sqrt(2.0), shape)
        elif self.family == "student_t":
            dof = float(self.params.get("dof", 5.0))
            w = rng.standard_t(dof, shape) / np.sqrt(dof / (dof - 2.0))
        else:
            rate = float(self.params.get("rate", 1.0))
            counts = rng.poisson(rate * cell, shape)
            # a sum of c standard normals is N(0, c)
            w = np.sqrt(counts) * rng.standard_normal(shape)
            return w / cell
        return w / np.sqrt(cell)


def sample_sparse_process(op, noise, n, h):
    """Solve ``L s = w`` on a periodic box of ``n^d`` samples with spacing ``h``.

    Bins with ``|L| < 1e-8 max |L|`` get a zero spectrum.  ``meta`` records
    the noise and the spectral residual away from guarded bins.
    """
    d = op.d
    shape = (n,) * d
    w = noise.draw(shape, h ** d)
    W = np.fft.fftn(w).reshape(-1)
    L = evaluate_symbol(op, box_frequencies(n, h, d))
    mag = np.abs(L)
    keep = mag >= ORIGIN_GUARD * mag.max()
    S = np.zeros_like(W)
    S[keep] = W[keep] / L[keep]
    s = np.real(np.fft.ifftn(S.reshape(shape)))
    denom = np.linalg.norm(W[keep])
    resid = np.linalg.norm(L[keep] * S[keep] - W[keep]) / denom if denom > 0 else 0.0
    return SignalField(s, float(h), {"noise": noise.family, "seed": noise.seed,
                                     "guarded_bins": int(np.sum(~keep)),
                                     "spectral_residual": float(resid)})


def _lattice_point(D, j, k):
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.size != D.d:
        raise BadParameter(f"offset {k.tolist()} does not have {D.d} entries")
    return D.lattice_basis(j) @ k


def decorrelation_curve(op, D, j, k, n_max=16, N=128, tol=DEFAULT_TOL):
    """Normalized correlation of ``psi_{n,j+1}`` with its shift by ``D^j k``.

    For each ``n`` the periodized ``m_{n,j}^2``, equal to
    ``S_{2n} / S_n^2``, is integrated against ``exp(-i D^j k . w)`` over one
    fundamental domain and divided by its integral.  Returns complex values;
    the imaginary parts vanish for even symbols.
    """
    if n_max < 1:
        raise BadParameter("n_max must be >= 1")
    x = _lattice_point(D, j, k)
    grid = frequency_grid(D, j, N)
    pts = grid.points
    phase = np.exp(-1j * pts @ x)
    out = []
    for n in range(1, n_max + 1):
        Sn = power_sum(op, D, j, pts, n, tol)
        S2 = power_sum(op, D, j, pts, 2 * n, tol)
        # smin is the same for both sums, so S_{2n}/S_n^2 = acc_{2n}/acc_n^2
        M = S2.acc / Sn.acc ** 2
        out.append(complex(np.sum(M * phase) / np.sum(M)))
    return np.array(out)


def uniqueness_fraction(op, D, j, N=64, radius=2, rel=1e-9):
    """Share of grid points whose alias of smallest ``|L|`` is unique.

    The maximizing coset of ``m_{1,j}`` is the alias minimizing ``|L|``;
    aliases are searched within ``radius`` lattice steps of the reduced
    point.
    """
    grid = frequency_grid(D, j, N)
    basis = grid.basis
    pts = reduce_to_domain(grid.points, basis)
    ks = np.array(list(itertools.product(range(-radius, radius + 1), repeat=D.d)), float)
    offs = ks @ basis.T
    vals = np.stack([op.root.abs2(pts + o) for o in offs], axis=1)
    part = np.partition(vals, 1, axis=1)
    lo, second = part[:, 0], part[:, 1]
    unique = second - lo > rel * np.maximum(second, 1e-300)
    return float(np.mean(unique))


def approx_order_fit(op, D, f, scales, method="projection", tol=DEFAULT_TOL):
    """Least-squares slope of ``log E(f, V_j)`` against ``j log |det D|^{1/d}``."""
    scales = list(scales)
    if len(scales) < 3:
        raise BadParameter("need at least 3 scales")
    errs = np.array([approximation_error(f, op, D, j, method, tol) for j in scales])
    if np.any(errs < 1e-12):
        raise DegenerateFit(f"approximation errors below 1e-12: {errs.tolist()}")
    x = np.array(scales, dtype=float) * np.log(float(D.det_abs) ** (1.0 / D.d))
    y = np.log(errs)
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return {"slope": float(coef[0]), "residual": resid, "scales": scales,
            "errors": errs.tolist()}


def discrete_sum_bounds(h, r, d, mode="lower", tol=1e-10):
    """Sums of ``|x|^{-2r}`` over the lattice ``h Z^d``.

    ``lower``: points with ``|x| >= 2h``, ratio to ``h^{-2r}``.
    ``upper``: points with ``|x| >= q/4`` (``q/2`` is the separation radius of
    ``q Z^d`` with ``q = h``), ratio to ``q^{-2r}``.
    """
    if not r > d / 2:
        raise BadParameter(f"need r > d/2, got r={r}, d={d}")
    if not h > 0:
        raise BadParameter("spacing must be positive")
    if mode not in ("lower", "upper"):
        raise BadParameter(f"unknown mode {mode!r}")
    cut = 2.0 * h if mode == "lower" else h / 4.0
    q = 2.0 * r

    def func(x):
        rho = np.sqrt(np.sum(x * x, axis=-1))
        with np.errstate(divide="ignore"):
            v = rho ** (-q)
        return np.where(rho >= cut * (1 - 1e-12), v, 0.0)

    basis = h * np.eye(d)
    total = float(shell_sum(func, basis, np.zeros((1, d)), [(1.0, q)], tol)[0])
    return {"sum_value": total, "bound_ratio": total * h ** q, "mode": mode, "h": h,
            "r": r, "d": d}


def _excess_kurtosis(v):
    if v.size < 4 or not np.any(v != v[0]):
        return None
    return float(stats.kurtosis(v, fisher=True, bias=True))


def sparsity_report(p, bins=32):
    """Per-scale histogram, excess kurtosis and ``l1 / (sqrt(n) l2)`` ratio."""
    if p.count() == 0:
        raise BadParameter("empty pyramid")
    out = {}
    for j in sorted({s for s, _ in p.coeffs}):
        v = np.concatenate([p.coeffs[k] for k in p.keys() if k[0] == j])
        l2 = float(np.linalg.norm(v))
        if l2 == 0:
            out[j] = {"count": int(v.size), "histogram": {"counts": [], "edges": []},
                      "kurtosis": None, "l1_l2": None}
            continue
        counts, edges = np.histogram(v, bins=bins)
        out[j] = {"count": int(v.size),
                  "histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
                  "kurtosis": _excess_kurtosis(v),
                  "l1_l2": float(np.sum(np.abs(v)) / (np.sqrt(v.size) * l2))}
    return out
