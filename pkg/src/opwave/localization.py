"""Periodic localization symbols that cancel the zeros of an operator symbol.

A localization at scale ``j`` is periodic with respect to the dual lattice
``2 pi (D^T)^{-j} Z^d``; dividing it by the operator symbol gives the
generalized B-spline spectrum.
"""

from dataclasses import dataclass, field
import itertools

import numpy as np

from .errors import UnsupportedOperator, UnsupportedScale, ZeroMismatch
from .lattice import reduce_to_domain
from .symbols import HELMHOLTZ_K2

DEFAULT_EPS = 1.0 / 16.0


def smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        g = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
        return f / (f + g)


@dataclass(frozen=True)
class LocalizationSpec:
    kind: str  # identity | exponential | discrete_laplacian | radial_blend | constant
    j: int
    D: object
    params: tuple = ()
    op: object = field(default=None, compare=False)

    @property
    def period_basis(self):
        return self.D.dual_basis(self.j)

    def evaluate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.D.d and self.D.d == 1:
            pts = pts.reshape(-1, 1)
        lead = pts.shape[:-1]
        pts = pts.reshape(-1, self.D.d)
        if self.kind == "identity":
            out = np.ones(len(pts), dtype=complex)
        elif self.kind == "constant":
            out = np.full(len(pts), complex(self.params[0]))
        elif self.kind == "exponential":
            alpha = self.params[0]
            s = self.D.a ** self.j
            out = 1.0 - np.exp(s * alpha) * np.exp(-1j * s * pts[:, 0])
        elif self.kind == "discrete_laplacian":
            m = self.params[0]
            V = self.D.lattice_basis(self.j)
            arg = pts @ V  # (P, d): w . v_i for lattice generators v_i
            tot = np.sum(4.0 * np.sin(arg / 2.0) ** 2, axis=1)
            out = (self.D.a ** (-2.0 * self.j) * tot) ** m + 0j
        elif self.kind == "radial_blend":
            eps, rho0 = self.params
            red = reduce_to_domain(pts, self.period_basis)
            s = np.sum(red * red, axis=1)
            rho = np.sqrt(s)
            t = np.abs(rho - rho0) / eps
            b = smoothstep((3.0 - t) / 2.0)
            sign = np.where(rho < rho0, 1.0, -1.0)
            out = np.where(t < 1.0, HELMHOLTZ_K2 - s, b * (HELMHOLTZ_K2 - s) + (1 - b) * sign) + 0j
        else:
            raise UnsupportedOperator(self.kind)
        return out.reshape(lead)

    def coefficients(self, N=64, trunc=1e-12):
        """Lattice-series coefficients ``p[k]`` with ``L_d(w) = sum p[k] e^{i w . D^j k}``.

        Recovered by a discrete Fourier analysis over one period and truncated
        at ``trunc`` (absolute).  Returns a dict ``k -> p[k]``.
        """
        d = self.D.d
        B = self.period_basis
        u = (np.arange(N)) / N
        mesh = np.meshgrid(*([u] * d), indexing="ij")
        U = np.stack([m.ravel() for m in mesh], axis=-1)
        vals = self.evaluate(U @ B.T).reshape((N,) * d)
        # w = B u and w . D^j k = 2 pi u . k, so a forward DFT over u gives p[k]
        coef = np.fft.fftn(vals) / N ** d
        out = {}
        for idx in itertools.product(range(N), repeat=d):
            c = coef[idx]
            if abs(c) > trunc:
                k = tuple(int(i if i < N // 2 else i - N) for i in idx)
                out[k] = complex(c)
        return out


def make_localization(op, D, j, eps=DEFAULT_EPS, mode="auto", strict=True):
    """Localization for catalog operators.

    ``mode="identity"`` forces the constant 1 (useful for constructed failure
    cases); ``mode="auto"`` dispatches on the operator kind.  The Helmholtz
    blend is offered for ``j <= 0`` only; ``strict=False`` also builds it at
    coarser scales as long as the blend annulus fits in the period cell (the
    wavelet space at scale ``j`` needs ``V_{j+1}``).
    """
    root = op.root
    if mode == "identity":
        return LocalizationSpec("identity", j, D, op=op)
    if op.kind == "power":
        base = make_localization(root, D, j, eps, strict=strict)
        return PowerLocalization(base, op.n)
    if root.kind == "matern":
        return LocalizationSpec("identity", j, D, op=op)
    if root.kind == "exp_derivative":
        if D.d != 1:
            raise UnsupportedOperator("exp_derivative requires d=1")
        return LocalizationSpec("exponential", j, D, (root.params[0],), op=op)
    if root.kind == "laplacian":
        return LocalizationSpec("discrete_laplacian", j, D, (root.params[0],), op=op)
    if root.kind == "helmholtz":
        if j > 0 and strict:
            raise UnsupportedScale(f"helmholtz localization only for j <= 0, got j={j}")
        if D.d != 2 or not np.array_equal(D.matrix, 2 * np.eye(2)):
            raise UnsupportedOperator("helmholtz localization requires D = 2I in d = 2")
        rho0 = float(np.sqrt(HELMHOLTZ_K2))
        half_width = np.pi * D.a ** (-j)
        if rho0 + 3 * eps >= half_width:
            raise UnsupportedScale(f"blend annulus does not fit the period cell at j={j}")
        return LocalizationSpec("radial_blend", j, D, (float(eps), rho0), op=op)
    raise UnsupportedOperator(f"no localization for {root.kind}")


@dataclass(frozen=True)
class PowerLocalization:
    """Localization of ``L^n``: the n-th power of the base localization."""

    base: LocalizationSpec
    n: int

    @property
    def j(self):
        return self.base.j

    @property
    def D(self):
        return self.base.D

    @property
    def kind(self):
        return f"{self.base.kind}^{self.n}"

    @property
    def period_basis(self):
        return self.base.period_basis

    def evaluate(self, points):
        return self.base.evaluate(points) ** self.n

    coefficients = LocalizationSpec.coefficients


def localization_available(op, D, j, eps=DEFAULT_EPS):
    try:
        make_localization(op, D, j, eps)
    except (UnsupportedScale, UnsupportedOperator):
        return False
    return True


def periodicity_residual(loc, points, shifts=1):
    """Max of ``|L_d(w + beta) - L_d(w)|`` over lattice shifts ``|k|_inf <= shifts``."""
    pts = np.atleast_2d(points)
    B = loc.period_basis
    base = loc.evaluate(pts)
    worst = 0.0
    for k in itertools.product(range(-shifts, shifts + 1), repeat=loc.D.d):
        if not any(k):
            continue
        shifted = loc.evaluate(pts + B @ np.array(k, dtype=float))
        worst = max(worst, float(np.max(np.abs(shifted - base))))
    return worst


@dataclass(frozen=True)
class QuotientReport:
    max_quotient: float
    min_quotient_near_zeros: float
    passed: bool
    limits: tuple


def quotient_boundedness(op, loc, points, radii=(1e-2, 1e-3, 1e-4), directions=16):
    """Check that ``L_d / L`` is bounded and bounded away from zero.

    Away from the zero set it is evaluated on ``points``; near each zero it is
    probed on annuli of shrinking ``radii``.  Raises :class:`ZeroMismatch` if
    the quotient blows up or collapses as the annuli shrink.
    """
    from .symbols import evaluate_symbol

    def quotient(w):
        return np.abs(loc.evaluate(w) / evaluate_symbol(op, w))

    q = quotient(np.atleast_2d(points))
    q = q[np.isfinite(q)]
    qmax = float(q.max()) if q.size else 0.0
    near_min = np.inf
    limits = []
    probes = _zero_probes(op, radii, directions)
    prev = None
    for r, probe in zip(radii, probes):
        if probe is None:
            continue
        qr = quotient(probe)
        lo, hi = float(np.min(qr)), float(np.max(qr))
        limits.append((r, lo, hi))
        near_min = min(near_min, lo)
        qmax = max(qmax, hi)
        if prev is not None:
            if hi > 2.0 * prev[1] + 1e-12 or lo < 0.5 * prev[0]:
                raise ZeroMismatch(
                    f"quotient L_d/L not bounded near the zero set of {op.label()} "
                    f"(radius {r:g}: range [{lo:.3g}, {hi:.3g}], previous "
                    f"[{prev[0]:.3g}, {prev[1]:.3g}])")
        prev = (lo, hi)
    if not np.isfinite(qmax):
        raise ZeroMismatch("quotient is infinite")
    return QuotientReport(qmax, float(near_min), True, tuple(limits))


def _zero_probes(op, radii, directions):
    d = op.d
    zs = op.zero_set
    if zs.empty:
        return [None] * len(radii)
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        ang = 2 * np.pi * (np.arange(directions) + 0.5) / directions
        dirs = np.stack([np.cos(ang), np.sin(ang)] + [np.zeros_like(ang)] * (d - 2), axis=1)
    out = []
    for r in radii:
        pts = []
        for p in zs.points:
            pts.append(np.asarray(p) + r * dirs)
        for c, rho in zs.spheres:
            for s in (-1.0, 1.0):
                pts.append(np.asarray(c) + (rho + s * r) * dirs)
        out.append(np.concatenate(pts))
    return out
