"""Sampled signals on periodic boxes and the index arithmetic that ties
their FFT bins and sample positions to the lattices of a dilation matrix.

A signal holds ``n^d`` samples at ``x_p = h p`` (``p`` taken mod ``n``) and
is read as the band-limited periodic function whose spectrum lives on the
bins ``xi_q = 2 pi q / (n h)``, ``q`` in ``[-n/2, n/2)^d``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import IncommensurateGrid


@dataclass
class SignalField:
    """Real samples on a periodic box with spacing ``h``."""

    values: np.ndarray
    h: float
    meta: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.values.ndim

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape

    @property
    def extent(self):
        return self.n * self.h

    def spectrum(self):
        """Fourier transform samples ``h^d FFT(values)`` (FFT bin order)."""
        return self.h ** self.d * np.fft.fftn(self.values)

    def frequencies(self):
        return box_frequencies(self.n, self.h, self.d)

    @property
    def frequency_cell(self):
        return (2 * np.pi / self.extent) ** self.d

    def norm(self):
        return float(np.sqrt(self.h ** self.d * np.sum(np.abs(self.values) ** 2)))

    def positions(self):
        """Centered sample positions ``(n^d, d)``."""
        idx = np.fft.fftfreq(self.n, 1.0 / self.n)
        mesh = np.meshgrid(*([idx] * self.d), indexing="ij")
        return self.h * np.stack([m.ravel() for m in mesh], axis=-1)


def sample_function(func, n, h, d):
    """Sample ``func`` (rows of positions -> values) on the centered box."""
    sig = SignalField(np.zeros((n,) * d), float(h))
    vals = np.asarray(func(sig.positions()), dtype=float)
    return SignalField(vals.reshape((n,) * d), float(h))


def bin_indices(n, d):
    """Integer bin vectors ``q`` in FFT order, shape ``(n^d, d)``."""
    q = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
    mesh = np.meshgrid(*([q] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def box_frequencies(n, h, d):
    return bin_indices(n, d) * (2 * np.pi / (n * h))


def integer_matrix(M, what):
    Mi = np.round(M)
    if not np.allclose(M, Mi, atol=1e-9):
        raise IncommensurateGrid(f"{what} is not an integer matrix: {M.tolist()}")
    return Mi.astype(np.int64)


def sample_spacing(D, j_min):
    """Spacing ``h`` with ``h Z^d = D^{j_min} Z^d``, or IncommensurateGrid."""
    M = D.power(j_min)
    h = float(D.det_abs) ** (j_min / D.d)
    U = M / h
    Ui = np.round(U)
    if not np.allclose(U, Ui, atol=1e-9) or abs(round(np.linalg.det(Ui))) != 1:
        raise IncommensurateGrid(
            f"D^{j_min} does not generate a square grid; use another finest scale")
    return float(h)


def index_lattice(D, j, h):
    """Integer matrix ``D^j / h``: the lattice ``D^j Z^d`` in sample-index units."""
    return integer_matrix(D.power(j) / h, f"D^{j} / h")


def check_box(D, j, n, h):
    """The box period ``n h`` must lie in ``D^j Z^d``."""
    M = np.linalg.inv(D.power(j)) * (n * h)
    if not np.allclose(M, np.round(M), atol=1e-9):
        raise IncommensurateGrid(f"box of {n} samples is not periodic on D^{j} Z^d")


def residue_key(v, Q):
    """Canonical residue of integer rows ``v`` modulo the lattice ``Q Z^d``."""
    u = np.linalg.solve(Q.astype(float), v.T.astype(float)).T
    frac = u - np.floor(u + 1e-9)
    r = np.round(frac @ Q.T.astype(float)).astype(np.int64)
    return r


def class_labels(rows, Q):
    """Label rows of integer vectors by residue class modulo ``Q Z^d``."""
    r = residue_key(rows, Q)
    _, inv = np.unique(r, axis=0, return_inverse=True)
    return inv.reshape(-1)


def dual_bin_lattice(D, j, n, h):
    """``2 pi (D^T)^{-j} Z^d`` in bin units: the integer matrix ``n h (D^T)^{-j}``."""
    return integer_matrix(n * h * np.linalg.matrix_power(np.linalg.inv(D.matrix.T), j)
                          if j >= 0 else n * h * np.linalg.matrix_power(D.matrix.T, -j),
                          f"bin lattice at scale {j}")


def coset_labels(D, j, n, h):
    """Per-sample label: ``-1`` off ``D^j Z^d``, else the coset index ``m``
    with position in ``D^j e_m + D^{j+1} Z^d``."""
    d = D.d
    p = bin_indices(n, d) % n
    # indices in FFT order equal row-major order once reduced mod n
    Mj = index_lattice(D, j, h).astype(float)
    u = np.linalg.solve(Mj, p.T.astype(float)).T
    on = np.all(np.abs(u - np.round(u)) < 1e-9, axis=1)
    u = np.round(u).astype(np.int64)
    labels = np.full(len(p), -1, dtype=np.int64)
    Dinv = np.linalg.inv(D.matrix)
    for m, e in enumerate(D.cosets):
        w = (u - np.array(e)) @ Dinv.T
        hit = on & np.all(np.abs(w - np.round(w)) < 1e-9, axis=1)
        labels[hit] = m
    return labels.reshape((n,) * d)
