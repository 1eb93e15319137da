"""Adaptive lattice periodization of inverse symbol powers.

Computes ``S_p(w) = sum_k |L(w + B k)|^{-2p}`` for a dual-lattice basis ``B``
by summing cube shells ``|k|_inf <= K`` and adding an asymptotic tail.  The
tail integrates the large-``|w|`` expansion of ``|L|^{-2p}`` over the region
outside the summed cube, with a midpoint-rule correction and the offset of
``w`` inside its cell; the remaining error decays like ``K^{d-q-4}``.  ``K``
doubles until two consecutive estimates agree to ``tol``.
"""

from dataclasses import dataclass
from functools import lru_cache
import itertools

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import SlowDecay
from .lattice import reduce_to_domain

K_START = 8
K_MAX = {1: 1 << 14, 2: 128, 3: 32}


@lru_cache(maxsize=None)
def cube_surface_moment(d, q):
    """``int_{|v|_inf = 1} |v|^{-q} dsigma``."""
    if d == 1:
        return 2.0
    if d == 2:
        val, _ = integrate.quad(lambda s: (1 + s * s) ** (-q / 2), 0.0, 1.0,
                                epsabs=1e-15, epsrel=1e-13)
        return 8.0 * val
    if d == 3:
        val, _ = integrate.dblquad(lambda t, s: (1 + s * s + t * t) ** (-q / 2),
                                   0.0, 1.0, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12)
        return 24.0 * val
    return float("nan")


def outer_cube_integral(d, q, R):
    """``int_{|y|_inf > R} |y|^{-q} dy`` for ``q > d``."""
    return cube_surface_moment(d, q) * R ** (d - q) / (q - d)


def tail_estimate(terms, d, beta, K, u2):
    """Tail of a lattice sum with asymptotic terms ``(c, q)`` (``|x|^{-q}``).

    ``beta`` is the scale of the dual basis (``|B y| = beta |y|``), ``u2`` the
    squared offset of each point in lattice units.
    """
    if d > 3 or not terms:
        return np.zeros_like(u2)
    R = K + 0.5
    kappa = u2 / (2.0 * d) - 1.0 / 24.0
    total = np.zeros_like(u2)
    for c, q in terms:
        if q <= d:
            continue
        lead = outer_cube_integral(d, q, R)
        lap = q * (q + 2 - d) * outer_cube_integral(d, q + 2, R)
        total = total + c * beta ** (-q) * (lead + kappa * lap)
    return total


def shell_offsets(basis, k_lo, k_hi):
    """Offsets ``B k`` for integer ``k`` with ``k_lo < |k|_inf <= k_hi``.

    ``k_lo = -1`` includes the origin.
    """
    d = basis.shape[0]
    rng = np.arange(-k_hi, k_hi + 1)
    K = np.array(list(itertools.product(rng, repeat=d)), dtype=float).reshape(-1, d)
    kin = np.max(np.abs(K), axis=1)
    K = K[kin > k_lo]
    return K @ basis.T


@dataclass
class AliasSum:
    """Normalized periodization ``S = acc * smin**-power`` at each point."""

    smin: np.ndarray
    acc: np.ndarray
    power: float
    K: int

    @property
    def value(self):
        with np.errstate(divide="ignore", over="ignore"):
            return self.acc * self.smin ** (-self.power)

    def ratio(self, s_point):
        """``|L(w)|^{-2p} / S(w)`` given ``s_point = |L(w)|^2``."""
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(s_point == 0.0, 1.0, (self.smin / s_point) ** self.power)
            u = np.where((self.smin == 0.0) & (s_point > 0.0), 0.0, u)
            return u / self.acc


def lattice_power_sum(op, basis, points, power=1, tol=1e-10, k_start=K_START,
                      k_max=None):
    """Periodize ``|L|^{-2 power}`` over the lattice spanned by ``basis`` columns.

    Raises :class:`SlowDecay` when ``2 r power <= d`` (divergent sum) or when
    the doubling sequence has not settled at ``k_max``.
    """
    d = op.d
    eff = power * op.power
    if 2.0 * op.order * power <= d:
        raise SlowDecay(f"sum of |L|^-{2 * power} diverges: 2*r*n = "
                        f"{2 * op.order * power:g} <= d = {d}")
    k_max = K_MAX.get(d, 16) if k_max is None else k_max
    pts = np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, d)
    red = reduce_to_domain(pts, basis)
    u = np.linalg.solve(basis, red.T).T
    u2 = np.sum(u * u, axis=1)
    beta = abs(np.linalg.det(basis)) ** (1.0 / d)
    terms = op.asymptotic_inverse(power)
    root = op.root
    code = root.kernel_code

    def run(lo, hi):
        offs = shell_offsets(basis, lo, hi)
        return _kernels.alias_power_sum(red, offs, eff, abs2=root.abs2, code=code,
                                        params=root.kernel_params)

    def corrected(state, K):
        smin, acc = state
        tail = tail_estimate(terms, d, beta, K, u2)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            scaled = np.where(smin > 0, tail * smin ** eff, 0.0)
        return acc + scaled

    # remainder after the tail correction decays like K^{d - q - 4}; dividing
    # the step difference by 2^p - 1 estimates the error of the newer value
    qmin = min((q for c, q in terms if q > d), default=None)
    shrink = 2.0 ** (qmin + 4 - d) - 1.0 if qmin is not None else 1.0

    K = k_start
    state = run(-1, K)
    est = corrected(state, K)
    while True:
        K2 = 2 * K
        if K2 > k_max:
            raise SlowDecay(f"lattice sum not settled to tol={tol:g} at K={K} "
                            f"(k_max={k_max})")
        new = _kernels.merge(state, run(K, K2), eff)
        est2 = corrected(new, K2)
        with np.errstate(divide="ignore", invalid="ignore"):
            rescale = np.where(state[0] > 0, (new[0] / state[0]) ** eff, 1.0)
            rescale = np.where(state[0] == new[0], 1.0, rescale)
            diff = np.abs(est2 - est * rescale) / np.abs(est2)
        diff = np.nan_to_num(diff, nan=0.0)
        state, est, K = new, est2, K2
        if np.max(diff) <= tol * shrink:
            break
    return AliasSum(state[0], est, eff, K)


def shell_sum(func, basis, points, terms=(), tol=1e-10, k_start=K_START, k_max=None):
    """Direct lattice sum ``sum_k func(w + B k)`` for a vectorized ``func``.

    ``func`` receives blocks of shape ``(points, offsets, d)`` and returns
    ``(points, offsets)``.

    ``terms`` lists ``(c, q)`` pairs (``c`` may be per-point arrays) with
    ``func(x) ~ sum c |x|^{-q}`` for large ``|x|``; they only feed the tail
    estimate.  This is the slow reference path used for cross-checks; it
    makes no periodicity assumption about ``func``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = pts.shape[1]
    k_max = K_MAX.get(d, 16) if k_max is None else k_max
    red = reduce_to_domain(pts, basis)
    u = np.linalg.solve(basis, red.T).T
    u2 = np.sum(u * u, axis=1)
    beta = abs(np.linalg.det(basis)) ** (1.0 / d)

    chunk = max(1, min(1024, 2_000_000 // max(len(pts), 1)))

    def partial(lo, hi):
        offs = shell_offsets(basis, lo, hi)
        total = 0.0
        for start in range(0, len(offs), chunk):
            x = pts[:, None, :] + offs[None, start:start + chunk, :]
            total = total + np.sum(func(x), axis=1)
        return total

    K = k_start
    acc = partial(-1, K)
    est = acc + tail_estimate(terms, d, beta, K, u2)
    while True:
        if 2 * K > k_max:
            raise SlowDecay(f"direct lattice sum not settled at K={K}")
        acc = acc + partial(K, 2 * K)
        K *= 2
        est2 = acc + tail_estimate(terms, d, beta, K, u2)
        scale = np.maximum(np.abs(est2), 1e-300)
        done = np.max(np.abs(est2 - est) / scale) <= tol
        est = est2
        if done:
            return est
