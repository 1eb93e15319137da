"""Hot lattice-sum kernels.

Two interchangeable backends compute the same normalized alias sums:

* ``numba``: ``@njit(parallel=True)`` loops, one sequential sum per point, so
  results do not depend on the worker count.
* ``numpy``: chunked vectorized fallback.

The backend is chosen at import from ``OPWAVE_BACKEND`` (``numba`` or
``numpy``); ``OPWAVE_DISABLE_NUMBA=1`` forces numpy.  Use :func:`set_backend`
to switch at runtime.

A normalized alias sum of ``|L(x)|^{-2p}`` over the points ``x = w + o_k`` is
returned as the pair ``(smin, acc)`` with ``smin = min_k |L(x_k)|^2`` and
``acc = sum_k (smin / |L(x_k)|^2)^p`` (a term with ``|L| = 0`` counts as 1 and
makes every nonzero term count as 0).  The true sum is ``acc * smin**-p``;
keeping the pair avoids overflow for high powers and near-zero symbols.
"""

import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

# symbol codes understood by the compiled kernel
MATERN = 0
LAPLACIAN = 1
HELMHOLTZ = 2
EXPDERIV = 3
NO_CODE = -1


def _default_backend():
    if os.environ.get("OPWAVE_DISABLE_NUMBA", "") not in ("", "0"):
        return "numpy"
    want = os.environ.get("OPWAVE_BACKEND", "numba").lower()
    if want == "numba" and HAVE_NUMBA:
        return "numba"
    return "numpy"


BACKEND = _default_backend()


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    prev, BACKEND = BACKEND, name
    return prev


def set_threads(n):
    if HAVE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def catalog_abs2(s, code, params):
    """|L|^2 as a function of s = |x|^2 for the catalog symbols (numpy)."""
    if code == MATERN:
        return (1.0 + s) ** params[0]
    if code == LAPLACIAN:
        return s ** (2.0 * params[0])
    if code == HELMHOLTZ:
        t = params[0] - s
        return t * t
    if code == EXPDERIV:
        return s + params[0] * params[0]
    raise ValueError(f"no catalog symbol with code {code}")


def merge(state_a, state_b, power):
    """Combine two normalized partial sums over disjoint offset sets."""
    smin_a, acc_a = state_a
    smin_b, acc_b = state_b
    smin = np.minimum(smin_a, smin_b)
    with np.errstate(divide="ignore", invalid="ignore"):
        fa = np.where(smin_a == smin, 1.0, (smin / smin_a) ** power)
        fb = np.where(smin_b == smin, 1.0, (smin / smin_b) ** power)
    return smin, acc_a * fa + acc_b * fb


def _numpy_alias_sum(points, offsets, abs2, power, chunk=256):
    P = points.shape[0]
    smin = np.full(P, np.inf)
    acc = np.zeros(P)
    for start in range(0, offsets.shape[0], chunk):
        off = offsets[start:start + chunk]
        x = points[:, None, :] + off[None, :, :]
        v = abs2(x)
        cmin = v.min(axis=1)
        zero = cmin == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(zero[:, None], (v == 0.0).astype(float),
                             (cmin[:, None] / v) ** power)
        cacc = terms.sum(axis=1)
        smin, acc = merge((smin, acc), (cmin, cacc), power)
    return smin, acc


if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _nb_pow(x, e):
        # integer and half-integer exponents avoid the generic pow call
        twice = 2.0 * e
        if twice == np.floor(twice) and 0.0 < twice <= 32.0:
            k = int(twice)
            r = np.sqrt(x) if k & 1 else 1.0
            b = x
            k >>= 1
            while k:
                if k & 1:
                    r *= b
                b *= b
                k >>= 1
            return r
        return x ** e

    @njit(cache=True, inline="always")
    def _nb_abs2(s, code, p0):
        if code == MATERN:
            return _nb_pow(1.0 + s, p0)
        elif code == LAPLACIAN:
            return _nb_pow(s, 2.0 * p0)
        elif code == HELMHOLTZ:
            t = p0 - s
            return t * t
        else:
            return s + p0 * p0

    @njit(parallel=True, cache=True)
    def _nb_alias_sum(points, offsets, code, p0, power, smin_out, acc_out):
        P, d = points.shape
        S = offsets.shape[0]
        for i in prange(P):
            smin = np.inf
            acc = 0.0
            for k in range(S):
                s = 0.0
                for c in range(d):
                    x = points[i, c] + offsets[k, c]
                    s += x * x
                v = _nb_abs2(s, code, p0)
                if v == 0.0:
                    if smin > 0.0:
                        acc = 0.0
                        smin = 0.0
                    acc += 1.0
                elif smin == 0.0:
                    continue
                elif v < smin:
                    if acc > 0.0:
                        acc *= _nb_pow(v / smin, power)
                    smin = v
                    acc += 1.0
                else:
                    acc += _nb_pow(smin / v, power)
            smin_out[i] = smin
            acc_out[i] = acc


def alias_power_sum(points, offsets, power, abs2=None, code=NO_CODE, params=()):
    """Normalized sum of ``|L(w + o)|^{-2 power}`` over offsets ``o``.

    ``abs2`` maps arrays of shape ``(..., d)`` to ``|L|^2`` and is used by the
    numpy path; ``code``/``params`` identify a catalog radial symbol for the
    compiled path.
    """
    points = np.ascontiguousarray(points, dtype=float)
    offsets = np.ascontiguousarray(offsets, dtype=float)
    if BACKEND == "numba" and code != NO_CODE:
        P = points.shape[0]
        smin = np.empty(P)
        acc = np.empty(P)
        _nb_alias_sum(points, offsets, code, float(params[0]), float(power), smin, acc)
        return smin, acc
    if abs2 is None:
        par = np.asarray(params, dtype=float)
        abs2 = lambda x: catalog_abs2(np.sum(x * x, axis=-1), code, par)  # noqa: E731
    return _numpy_alias_sum(points, offsets, abs2, float(power))
