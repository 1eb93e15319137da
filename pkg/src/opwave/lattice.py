"""Dilation matrices of the form D = aR, cosets, dual lattices and frequency grids."""

from dataclasses import dataclass
from functools import cached_property
import itertools
import json
import re

import numpy as np

from .errors import (
    BadParameter,
    InternalError,
    NotExpansive,
    NotScaledOrthogonal,
    ResolutionTooSmall,
)

_ORTHO_TOL = 1e-12
_PERIOD_CAP = 64
_SNAP = float(2 ** 40)


@dataclass(frozen=True)
class DilationMatrix:
    """Integer matrix ``D = a R`` with ``R`` orthogonal and ``a > 1``.

    Build instances with :func:`build_dilation`; the constructor does not
    validate.
    """

    entries: tuple

    @cached_property
    def matrix(self):
        return np.array(self.entries, dtype=float)

    @property
    def d(self):
        return len(self.entries)

    @cached_property
    def det_abs(self):
        return int(round(abs(np.linalg.det(self.matrix))))

    @cached_property
    def a(self):
        return self.det_abs ** (1.0 / self.d)

    @cached_property
    def R(self):
        return self.matrix / self.a

    @cached_property
    def cosets(self):
        return coset_representatives(self)

    def power(self, j):
        """``D^j`` as a float matrix (``j`` may be negative)."""
        return np.linalg.matrix_power(self.matrix, j) if j >= 0 else \
            np.linalg.matrix_power(np.linalg.inv(self.matrix), -j)

    def dual_basis(self, j):
        """Columns generate the dual lattice ``2 pi (D^T)^{-j} Z^d``."""
        return 2.0 * np.pi * np.linalg.matrix_power(np.linalg.inv(self.matrix.T), j) \
            if j >= 0 else 2.0 * np.pi * np.linalg.matrix_power(self.matrix.T, -j)

    def lattice_basis(self, j):
        """Columns generate ``D^j Z^d``."""
        return self.power(j)

    def coset_shift(self, j, m):
        """Frequency shift ``2 pi (D^T)^{-j-1} e_m``."""
        return self.dual_basis(j + 1) @ np.asarray(self.cosets[m], dtype=float)

    def label(self):
        if self.d == 2 and self.entries == ((1, 1), (1, -1)):
            return "quincunx"
        if np.array_equal(self.matrix, self.matrix[0, 0] * np.eye(self.d)):
            return f"{int(self.matrix[0, 0])}I" if self.d == 2 else \
                f"matrix:{json.dumps([list(r) for r in self.entries])}"
        return f"matrix:{json.dumps([list(r) for r in self.entries])}"


def build_dilation(matrix):
    """Validate an integer matrix and return a :class:`DilationMatrix`."""
    M = np.atleast_2d(np.asarray(matrix))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise BadParameter(f"dilation matrix must be square, got shape {M.shape}")
    if not np.all(np.equal(np.mod(M, 1), 0)):
        raise BadParameter("dilation matrix must have integer entries")
    Mi = M.astype(np.int64)
    Mf = Mi.astype(float)
    eig = np.abs(np.linalg.eigvals(Mf))
    if np.any(eig <= 1.0 + 1e-12):
        raise NotExpansive(f"eigenvalue magnitudes {eig.tolist()} not all > 1")
    gram = Mf.T @ Mf
    a2 = gram[0, 0]
    if not np.allclose(gram, a2 * np.eye(len(Mf)), rtol=0, atol=_ORTHO_TOL * max(a2, 1)):
        raise NotScaledOrthogonal("M^T M is not a multiple of the identity")
    D = DilationMatrix(tuple(tuple(int(v) for v in row) for row in Mi))
    R = D.R
    if np.max(np.abs(R.T @ R - np.eye(D.d))) > _ORTHO_TOL:
        raise NotScaledOrthogonal("scaled factor is not orthogonal")
    if abs(D.a ** D.d - D.det_abs) > 1e-9 * D.det_abs:
        raise InternalError("|det D| != a^d")
    return D


def coset_representatives(D):
    """Integer points of ``D [0,1)^d``, ordered with the last coordinate most significant."""
    M = D.matrix
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=D.d))) @ M.T
    lo = np.floor(corners.min(axis=0)).astype(int)
    hi = np.ceil(corners.max(axis=0)).astype(int)
    Minv = np.linalg.inv(M)
    reps = []
    for p in itertools.product(*(range(l, h + 1) for l, h in zip(lo, hi))):
        u = Minv @ np.array(p, dtype=float)
        u = np.where(np.abs(u) < 1e-12, 0.0, u)
        if np.all(u >= -1e-12) and np.all(u < 1.0 - 1e-12):
            reps.append(tuple(int(v) for v in p))
    reps.sort(key=lambda v: tuple(reversed(v)))
    if len(reps) != D.det_abs:
        raise InternalError(f"found {len(reps)} cosets, expected {D.det_abs}")
    return tuple(reps)


def period_exponent(D):
    """Smallest ``n >= 1`` with ``D^n = a^n I``."""
    M = np.array(D.entries, dtype=np.int64)
    P = np.eye(D.d, dtype=np.int64)
    for n in range(1, _PERIOD_CAP + 1):
        P = P @ M
        diag = P[0, 0]
        if np.array_equal(P, diag * np.eye(D.d, dtype=np.int64)) and abs(diag) > 0:
            if abs(diag - D.a ** n) < 1e-6 * D.a ** n:
                return n
    raise InternalError(f"no period exponent found up to {_PERIOD_CAP}")


def in_lattice(points, basis, tol=1e-9):
    """Membership of points (rows) in the lattice generated by ``basis`` columns."""
    c = np.linalg.solve(basis, np.atleast_2d(points).T).T
    return np.all(np.abs(c - np.round(c)) < tol, axis=-1)


def reduce_to_domain(points, basis):
    """Map points to the parallelepiped ``basis [-1/2, 1/2)^d``."""
    pts = np.atleast_2d(points)
    c = np.linalg.solve(basis, pts.T).T
    c = c - np.floor(c + 0.5)
    return c @ basis.T


@dataclass(frozen=True)
class FrequencyGrid:
    """Sample of one fundamental domain of ``2 pi (D^T)^{-j} Z^d``.

    Points are ``B u`` with ``B`` the dual basis and ``u`` on a uniform
    ``N^d`` grid of ``[-1/2, 1/2)^d``, optionally shifted by half a step.
    """

    D: DilationMatrix
    j: int
    N: int
    use_offset: bool = True

    @property
    def d(self):
        return self.D.d

    @property
    def shape(self):
        return (self.N,) * self.d

    @cached_property
    def basis(self):
        return self.D.dual_basis(self.j)

    @cached_property
    def unit(self):
        u = -0.5 + (np.arange(self.N) + (0.5 if self.use_offset else 0.0)) / self.N
        return u

    @cached_property
    def offset(self):
        return np.full(self.d, 0.5 / self.N if self.use_offset else 0.0) @ self.basis.T

    @cached_property
    def points(self):
        mesh = np.meshgrid(*([self.unit] * self.d), indexing="ij")
        U = np.stack([m.ravel() for m in mesh], axis=-1)
        P = U @ self.basis.T
        P.setflags(write=False)
        return P

    @property
    def cell_volume(self):
        """Quadrature weight of one grid point."""
        return abs(np.linalg.det(self.basis)) / self.N ** self.d

    @property
    def domain_volume(self):
        return abs(np.linalg.det(self.basis))


def frequency_grid(D, j, N, use_offset=True):
    if N < 8:
        raise ResolutionTooSmall(f"N={N} < 8")
    if N & (N - 1):
        raise ResolutionTooSmall(f"N={N} is not a power of two")
    return FrequencyGrid(D, int(j), int(N), bool(use_offset))


_NAMED = {
    "quincunx": [[1, 1], [1, -1]],
}


def parse_dilation(text, d=None):
    """Parse ``2I``, ``3I``, ``quincunx`` or ``matrix:[[..],[..]]``."""
    text = text.strip()
    if text in _NAMED:
        return build_dilation(_NAMED[text])
    m = re.fullmatch(r"(\d+)I(?:(\d+))?", text)
    if m:
        dim = int(m.group(2)) if m.group(2) else (d or 2)
        return build_dilation(int(m.group(1)) * np.eye(dim, dtype=int))
    if text.startswith("matrix:"):
        try:
            mat = json.loads(text[len("matrix:"):])
        except json.JSONDecodeError as exc:
            raise BadParameter(f"bad matrix literal: {exc}") from None
        return build_dilation(mat)
    if re.fullmatch(r"\d+", text):
        return build_dilation([[int(text)]])
    raise BadParameter(f"unknown dilation {text!r}")


def lattice_symmetries(basis):
    """Signed coordinate permutations preserving the lattice of ``basis``.

    Returned as integer matrices acting on lattice coordinates ``u`` (with
    ``w = B u``).
    """
    d = basis.shape[0]
    Binv = np.linalg.inv(basis)
    out = []
    for perm in itertools.permutations(range(d)):
        for signs in itertools.product((1, -1), repeat=d):
            P = np.zeros((d, d))
            P[np.arange(d), perm] = signs
            M = Binv @ P @ basis
            Mi = np.round(M)
            if np.allclose(M, Mi, atol=1e-9):
                out.append(Mi.astype(np.int64))
    return out


def orbit_reduce(points, basis):
    """Group points that are equal modulo the lattice and its symmetries.

    Returns ``(representatives, inverse)`` with
    ``representatives[inverse] == points`` up to a lattice symmetry.  Only
    exact float matches are merged, so grids built from dyadic fractions
    collapse fully while arbitrary points are left alone.
    """
    pts = np.atleast_2d(points)
    u = np.linalg.solve(basis, pts.T).T
    # snap solver round-off so that symmetric grid points compare equal
    u = np.round(u * _SNAP) / _SNAP
    best = None
    for M in lattice_symmetries(basis):
        v = u @ M.T
        v = v - np.floor(v + 0.5)
        if best is None:
            best = v
            continue
        # lexicographic minimum row-wise
        take = np.zeros(len(v), dtype=bool)
        undecided = np.ones(len(v), dtype=bool)
        for c in range(v.shape[1]):
            lt = undecided & (v[:, c] < best[:, c])
            gt = undecided & (v[:, c] > best[:, c])
            take |= lt
            undecided &= ~(lt | gt)
        best[take] = v[take]
    reps, inverse = np.unique(best, axis=0, return_inverse=True)
    return reps @ basis.T, inverse.reshape(-1)
