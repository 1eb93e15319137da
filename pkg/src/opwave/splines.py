"""Generalized B-spline spectra, periodized power sums, Riesz bounds,
cardinal interpolants and the ``m`` functions.

All sampled objects are :class:`SpectralField` values on a
:class:`~opwave.lattice.FrequencyGrid`.  Lattice sums go through
:func:`~opwave.periodization.lattice_power_sum` and are cached per
``(operator, dilation, scale, points, power, tol)``.
"""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateLowerBound, SingularSample
from .lattice import frequency_grid, orbit_reduce
from .periodization import AliasSum, lattice_power_sum, shell_sum
from .symbols import evaluate_symbol

DEFAULT_TOL = 1e-10
_CACHE_SIZE = 32
_cache = OrderedDict()


@dataclass
class SpectralField:
    """Complex or real samples on a frequency grid.

    ``resample`` re-evaluates the same quantity at arbitrary points; it is
    used for local refinement of extremes.
    """

    values: np.ndarray
    grid: object
    tag: str
    resample: Optional[Callable] = field(default=None, repr=False)
    K: int = 0
    tol: float = 0.0

    @property
    def flat(self):
        return self.values.reshape(-1)


@dataclass(frozen=True)
class RieszBounds:
    A: float
    B: float
    tail_tol: float
    K: int


def clear_cache():
    _cache.clear()


def power_sum(op, D, j, points, n=1, tol=DEFAULT_TOL):
    """Cached :class:`~opwave.periodization.AliasSum` of ``|L|^{-2n}`` over ``2 pi (D^T)^{-j} Z^d``."""
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    key = (op, D, int(j), int(n), float(tol), pts.shape, pts.tobytes())
    hit = _cache.get(key)
    if hit is not None:
        _cache.move_to_end(key)
        return hit
    basis = D.dual_basis(j)
    if op.symmetric:
        reps, inv = orbit_reduce(pts, basis)
        r = lattice_power_sum(op, basis, reps, power=n, tol=tol)
        res = AliasSum(r.smin[inv], r.acc[inv], r.power, r.K)
    else:
        res = lattice_power_sum(op, basis, pts, power=n, tol=tol)
    _cache[key] = res
    if len(_cache) > _CACHE_SIZE:
        _cache.popitem(last=False)
    return res


def root_abs2(op, points):
    return op.root.abs2(np.asarray(points, dtype=float))


def _field(values, grid, tag, resample=None, K=0, tol=0.0):
    return SpectralField(np.asarray(values).reshape(grid.shape), grid, tag, resample, K, tol)


def bspline_values(op, loc, points):
    pts = np.atleast_2d(points)
    L = evaluate_symbol(op, pts)
    if np.any(L == 0):
        raise SingularSample("grid point on the zero set of the symbol")
    return loc.evaluate(pts) / L


def bspline_spectrum(op, loc, grid):
    """``L_d / L`` on the grid."""
    vals = bspline_values(op, loc, grid.points)
    return _field(vals, grid, "bspline", lambda p: bspline_values(op, loc, p))


def power_sum_values(op, loc, D, j, points, n=1, tol=DEFAULT_TOL):
    """``sum_k |phi_j(w + 2 pi (D^T)^{-j} k)|^{2n}`` at the given points."""
    pts = np.atleast_2d(points)
    S = power_sum(op, D, j, pts, n, tol)
    if np.any(S.smin == 0):
        raise SingularSample("alias of a grid point lies on the zero set")
    # |L_d|^{2n} S_n, combined as (|L_d|^{2/P} / smin)^{nP} to stay finite near zeros
    loc2 = np.abs(loc.evaluate(pts)) ** (2.0 / op.power)
    return S.acc * (loc2 / S.smin) ** S.power, S.K


def periodized_power_sum(op, loc, D, j, n, grid, tol=DEFAULT_TOL):
    vals, K = power_sum_values(op, loc, D, j, grid.points, n, tol)
    return _field(vals, grid, "power_sum",
                  lambda p: power_sum_values(op, loc, D, j, p, n, tol)[0], K, tol)


def riesz_bounds(power_sum_field, refine=True, subdivisions=4):
    """Grid extremes of a power sum, refined once around the extremal samples."""
    f = power_sum_field
    vals = np.real(f.flat)
    lo, hi = int(np.argmin(vals)), int(np.argmax(vals))
    A, B = float(vals[lo]), float(vals[hi])
    if refine and f.resample is not None:
        g = f.grid
        step = np.arange(-subdivisions, subdivisions + 1) / (subdivisions * g.N)
        mesh = np.meshgrid(*([step] * g.d), indexing="ij")
        local = np.stack([m.ravel() for m in mesh], axis=-1) @ g.basis.T
        A = min(A, float(np.min(np.real(f.resample(g.points[lo] + local)))))
        B = max(B, float(np.max(np.real(f.resample(g.points[hi] + local)))))
    if not A > 1e-12 * B:
        raise DegenerateLowerBound(f"A={A:.3g} is below 1e-12 * B (B={B:.3g})")
    return RieszBounds(A, B, f.tol, f.K)


def interpolant_values(op, D, j, points, tol=DEFAULT_TOL):
    """``|det D|^j |L|^{-2} / sum_k |L(w + beta_k)|^{-2}`` (localization-free)."""
    pts = np.atleast_2d(points)
    S = power_sum(op, D, j, pts, 1, tol)
    return float(D.det_abs) ** j * S.ratio(root_abs2(op, pts))


def interpolant_spectrum(op, D, j, grid, tol=DEFAULT_TOL):
    vals = interpolant_values(op, D, j, grid.points, tol)
    return _field(vals, grid, "interpolant", lambda p: interpolant_values(op, D, j, p, tol),
                  tol=tol)


def m_values(op, D, j, points, n=1, tol=DEFAULT_TOL):
    pts = np.atleast_2d(points)
    return power_sum(op, D, j, pts, n, tol).ratio(root_abs2(op, pts))


def m_function(op, D, j, n, grid, tol=DEFAULT_TOL):
    """``|L|^{-2n} / sum_k |L(w + beta_k)|^{-2n}``, always in ``[0, 1]``."""
    vals = m_values(op, D, j, grid.points, n, tol)
    return _field(vals, grid, "m_function", lambda p: m_values(op, D, j, p, n, tol), tol=tol)


def cardinal_samples(op, D, j, N=256, tol=1e-9):
    """Samples ``phi_j(D^j k)`` of the interpolant by inverse Fourier transform.

    The spectrum is folded onto one fundamental domain by a direct alias sum
    of ``|L|^{-2}`` (independent of the cached periodization) and then
    inverted with an FFT.  Entry ``k`` of the returned array (indices taken
    mod ``N``) is the sample at ``D^j k``.
    """
    grid = frequency_grid(D, j, N)
    pts = grid.points
    S = power_sum(op, D, j, pts, 1, DEFAULT_TOL).value
    reps, inv = orbit_reduce(pts, grid.basis) if op.symmetric else (pts, slice(None))
    folded = shell_sum(lambda x: 1.0 / root_abs2(op, x) ** op.power, grid.basis, reps,
                       op.asymptotic_inverse(1), tol)[inv]
    spec = float(D.det_abs) ** j * folded / S
    spec = spec.reshape(grid.shape)
    # w . D^j k = 2 pi u . k with u = -1/2 + (i + offset)/N
    d = D.d
    raw = np.fft.ifftn(spec) * N ** d
    k = np.fft.fftfreq(N, 1.0 / N)
    shift = -0.5 + (0.5 if grid.use_offset else 0.0) / N
    phase = np.ones(grid.shape, dtype=complex)
    for axis in range(d):
        sh = [1] * d
        sh[axis] = N
        phase = phase * np.exp(2j * np.pi * shift * k).reshape(sh)
    samples = raw * phase * grid.cell_volume / (2 * np.pi) ** d
    return np.real_if_close(samples, tol=1e6)
