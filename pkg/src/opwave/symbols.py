"""Catalog of admissible Fourier multiplier symbols.

Every operator is a frozen :class:`OperatorSpec`.  Catalog symbols are
radial in ``|w|^2`` except for the exponential derivative ``i w - alpha``.

Note on the Helmholtz symbol ``1/4 - |w|^2``: its zero set is the circle of
radius 1/2 (not 1/4, as is sometimes stated).  The computed radius is used.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .errors import BadParameter, Diverging

HELMHOLTZ_K2 = 0.25


@dataclass(frozen=True)
class ZeroSet:
    """Zero set as a union of points and spheres ``|w - c| = rho``."""

    points: tuple = ()
    spheres: tuple = ()  # ((center tuple, radius), ...)

    @property
    def empty(self):
        return not self.points and not self.spheres

    def describe(self):
        if self.empty:
            return "empty"
        parts = [f"point {list(p)}" for p in self.points]
        parts += [f"sphere(center={list(c)}, radius={r:.17g})" for c, r in self.spheres]
        return "; ".join(parts)

    def distance(self, w):
        """Distance from each row of ``w`` to the zero set (inf if empty)."""
        w = np.atleast_2d(w)
        out = np.full(w.shape[0], np.inf)
        for p in self.points:
            out = np.minimum(out, np.linalg.norm(w - np.asarray(p), axis=-1))
        for c, r in self.spheres:
            out = np.minimum(out, np.abs(np.linalg.norm(w - np.asarray(c), axis=-1) - r))
        return out


@dataclass(frozen=True)
class OperatorSpec:
    """An evaluable operator symbol with its order and zero set.

    ``kind`` is one of ``matern``, ``laplacian``, ``helmholtz``,
    ``exp_derivative``, ``power`` or ``custom``.  ``power`` wraps ``base``
    raised to ``n``.  ``custom`` symbols carry a vectorized ``func`` and are
    marked uncertified.
    """

    kind: str
    params: tuple
    d: int
    order: float
    zero_set: ZeroSet = ZeroSet()
    growth: bool = False
    base: Optional["OperatorSpec"] = None
    n: int = 1
    func: Optional[Callable] = field(default=None, compare=False, repr=False)
    certified: bool = True

    # --- identification -------------------------------------------------
    @property
    def root(self):
        return self.base if self.kind == "power" else self

    @property
    def power(self):
        return self.n if self.kind == "power" else 1

    @property
    def symmetric(self):
        """``|L|`` is invariant under signed coordinate permutations."""
        return self.root.kind in ("matern", "laplacian", "helmholtz", "exp_derivative")

    @property
    def kernel_code(self):
        return {
            "matern": _kernels.MATERN,
            "laplacian": _kernels.LAPLACIAN,
            "helmholtz": _kernels.HELMHOLTZ,
            "exp_derivative": _kernels.EXPDERIV,
        }.get(self.root.kind, _kernels.NO_CODE)

    @property
    def kernel_params(self):
        root = self.root
        if root.kind == "matern":
            return (root.params[0],)
        if root.kind == "laplacian":
            return (float(root.params[0]),)
        if root.kind == "helmholtz":
            return (HELMHOLTZ_K2,)
        if root.kind == "exp_derivative":
            return (root.params[0],)
        return (0.0,)

    def param(self, name):
        return dict(self.named_params)[name]

    @property
    def named_params(self):
        names = {"matern": ("nu",), "laplacian": ("m",), "exp_derivative": ("alpha",)}
        return tuple(zip(names.get(self.kind, ()), self.params))

    def label(self):
        if self.kind == "power":
            return f"pow:base={self.base.label()},n={self.n}"
        if self.kind == "matern":
            return f"matern:nu={self.params[0]:g}"
        if self.kind == "laplacian":
            return f"laplacian:m={self.params[0]:g}"
        if self.kind == "helmholtz":
            return "helmholtz"
        if self.kind == "exp_derivative":
            return f"expderiv:alpha={self.params[0]:g}"
        return "custom"

    # --- evaluation -----------------------------------------------------
    def evaluate(self, points):
        return evaluate_symbol(self, points)

    def abs2(self, points):
        """``|L(w)|^2`` for rows of ``points`` (any leading shape)."""
        pts = np.asarray(points, dtype=float)
        if self.kind == "custom":
            # user functions are vectorized over rows only
            rows = pts.reshape(-1, self.d)
            return (np.abs(self.func(rows)) ** 2).reshape(pts.shape[:-1])
        if self.kind == "power":
            return self.base.abs2(pts) ** self.n
        s = np.sum(pts * pts, axis=-1)
        return _kernels.catalog_abs2(s, self.kernel_code, np.asarray(self.kernel_params))

    def asymptotic_inverse(self, power=1):
        """Terms ``(c, q)`` with ``|L(w)|^{-2 power} ~ sum c |w|^{-q}`` for large ``|w|``."""
        n = power * self.power
        root = self.root
        if root.kind == "matern":
            nu = root.params[0]
            return ((1.0, 2 * nu * n), (-nu * n, 2 * nu * n + 2))
        if root.kind == "laplacian":
            return ((1.0, 4.0 * root.params[0] * n),)
        if root.kind == "helmholtz":
            return ((1.0, 4.0 * n), (n / 2.0, 4.0 * n + 2))
        if root.kind == "exp_derivative":
            a = root.params[0]
            return ((1.0, 2.0 * n), (-n * a * a, 2.0 * n + 2))
        return ()


def _require(cond, msg):
    if not cond:
        raise BadParameter(msg)


def _growth_flag(op):
    """Whether ``|L(w)| / |w|^r`` stays in a fixed band for ``|w| >= 8``."""
    radii = 8.0 * 2.0 ** np.arange(0, 17, 0.25)
    ratios = []
    for direction in _directions(op.d, 16):
        pts = radii[:, None] * direction[None, :]
        ratios.append(np.sqrt(op.abs2(pts)) / radii ** op.order)
    ratios = np.concatenate(ratios)
    ok = np.all(np.isfinite(ratios)) and ratios.min() > 0
    return bool(ok and ratios.max() / ratios.min() < 4.0)


def _directions(d, count):
    if d == 1:
        return np.array([[1.0], [-1.0]])
    rng = np.random.default_rng(1234)
    v = rng.standard_normal((count, d))
    v[0] = 0.0
    v[0, 0] = 1.0
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def make_operator(kind, params=None, d=1):
    """Build a catalog operator.

    ``params`` is a mapping: ``nu`` (matern), ``m`` (laplacian), ``alpha``
    (exp_derivative); helmholtz takes none.
    """
    params = dict(params or {})
    origin = (tuple([0.0] * d),)
    if kind == "matern":
        nu = float(params.get("nu", 1.0))
        _require(nu > d / 2, f"matern requires nu > d/2 = {d / 2}, got nu={nu}")
        op = OperatorSpec("matern", (nu,), d, nu)
    elif kind == "laplacian":
        m = params.get("m", 1)
        _require(float(m) == int(m), f"laplacian requires integer m, got {m}")
        m = int(m)
        _require(m > d / 4, f"laplacian requires m > d/4 = {d / 4}, got m={m}")
        op = OperatorSpec("laplacian", (m,), d, 2.0 * m, ZeroSet(points=origin))
    elif kind == "helmholtz":
        _require(d == 2, f"helmholtz requires d=2, got d={d}")
        op = OperatorSpec("helmholtz", (), d, 2.0,
                          ZeroSet(spheres=((origin[0], float(np.sqrt(HELMHOLTZ_K2))),)))
    elif kind in ("exp_derivative", "expderiv"):
        _require(d == 1, f"exp_derivative requires d=1, got d={d}")
        alpha = float(params.get("alpha", 1.0))
        _require(alpha > 0, f"exp_derivative requires alpha > 0, got alpha={alpha}")
        op = OperatorSpec("exp_derivative", (alpha,), d, 1.0)
    else:
        raise BadParameter(f"unknown operator kind {kind!r}")
    return replace(op, growth=_growth_flag(op))


def custom_operator(func, d, order, zero_set=ZeroSet()):
    """Wrap a user symbol (vectorized over rows of points); marked uncertified."""
    _require(order > d / 2, f"order must exceed d/2 = {d / 2}")
    op = OperatorSpec("custom", (), d, float(order), zero_set, func=func, certified=False)
    return replace(op, growth=_growth_flag(op))


def tabulated_operator(radii, values, d, order, zero_set=ZeroSet()):
    """Radial symbol from tabulated ``|w| -> L`` samples.

    Linear interpolation inside the table; beyond it the symbol is continued
    as ``c |w|^order`` matched at the last sample.
    """
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values)
    r_last, v_last = radii[-1], values[-1]

    def func(points):
        rho = np.linalg.norm(points, axis=-1)
        inside = np.interp(rho, radii, values.real) + 1j * np.interp(rho, radii, values.imag) \
            if np.iscomplexobj(values) else np.interp(rho, radii, values)
        outside = v_last * (np.maximum(rho, r_last) / r_last) ** order
        return np.where(rho <= r_last, inside, outside)

    return custom_operator(func, d, order, zero_set)


def evaluate_symbol(op, points):
    """Complex symbol values at rows of ``points``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1 and op.d == 1:
        pts = pts[:, None]
    if op.kind == "power":
        return evaluate_symbol(op.base, pts) ** op.n
    if op.kind == "custom":
        rows = pts.reshape(-1, op.d)
        return np.asarray(op.func(rows), dtype=complex).reshape(pts.shape[:-1])
    s = np.sum(pts * pts, axis=-1)
    if op.kind == "matern":
        return ((1.0 + s) ** (op.params[0] / 2)).astype(complex)
    if op.kind == "laplacian":
        return (s ** op.params[0]).astype(complex)
    if op.kind == "helmholtz":
        return (HELMHOLTZ_K2 - s).astype(complex)
    if op.kind == "exp_derivative":
        return 1j * pts[..., 0] - op.params[0]
    raise BadParameter(f"cannot evaluate {op.kind}")


def power_operator(op, n):
    """Operator with symbol ``L^n``."""
    n = int(n)
    _require(n >= 1, f"power must be >= 1, got {n}")
    if n == 1:
        return op
    if op.kind == "power":
        return power_operator(op.base, op.n * n)
    return OperatorSpec("power", (), op.d, op.order * n, op.zero_set, growth=op.growth,
                        base=op, n=n, certified=op.certified)


@dataclass(frozen=True)
class OrderCheck:
    C_estimate: float
    passed: bool
    C_half: float


def order_bound_check(op, r=None, octaves=16, per_octave=8, directions=16):
    """Estimate ``C = sup |w|^{2r} / (1 + |L|^2)`` on a radial probe.

    The probe spans ``octaves`` dyadic octaves above ``2^-4``; the estimate
    must change by at most 5% when the probed range doubles.
    """
    r = op.order if r is None else float(r)
    dirs = _directions(op.d, directions)

    def estimate(top):
        radii = 2.0 ** np.linspace(-4, top, int((top + 4) * per_octave) + 1)
        best = 0.0
        for v in dirs:
            pts = radii[:, None] * v[None, :]
            q = radii ** (2 * r) / (1.0 + op.abs2(pts))
            best = max(best, float(np.max(q)))
        return best

    c_half = estimate(octaves)
    c_full = estimate(2 * octaves)
    if not np.isfinite(c_full) or c_full > 1.05 * c_half:
        raise Diverging(f"|w|^{2 * r:g}/(1+|L|^2) grows without bound "
                        f"({c_half:.4g} -> {c_full:.4g}); order r={r:g} too large")
    return OrderCheck(c_full, True, c_half)


def sobolev_norm(op, spectrum=None, grid_points=None, cell=None, signal=None):
    """``(int |f^|^2 (1 + |L|^2))^{1/2}`` by quadrature.

    Pass either a sampled spectrum with its frequency points and cell volume,
    or a :class:`~opwave.band.SignalField` (its spectrum is taken by FFT).
    """
    if signal is not None:
        spectrum = signal.spectrum()
        grid_points = signal.frequencies()
        cell = signal.frequency_cell
    f2 = np.abs(np.asarray(spectrum)).ravel() ** 2
    w = op.abs2(np.asarray(grid_points).reshape(f2.size, op.d))
    return float(np.sqrt(np.sum(f2 * (1.0 + w)) * cell))


def parse_operator(text, d):
    """Parse ``matern:nu=1.5``, ``laplacian:m=2``, ``helmholtz``,
    ``expderiv:alpha=1.0`` or ``pow:base=<spec>,n=3``."""
    text = text.strip()
    if text.startswith("pow:"):
        body = text[4:]
        if not body.startswith("base=") or ",n=" not in body:
            raise BadParameter(f"bad power operator {text!r}")
        base_txt, n_txt = body[5:].rsplit(",n=", 1)
        return power_operator(parse_operator(base_txt, d), int(n_txt))
    kind, _, rest = text.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise BadParameter(f"bad operator parameter {item!r}")
            params[key.strip()] = float(val)
    if kind == "laplacian" and "m" in params:
        params["m"] = int(params["m"]) if params["m"] == int(params["m"]) else params["m"]
    return make_operator(kind, params, d)
