"""Operator-like wavelets on dilation-matrix lattices.

Spectral construction of generalized B-splines, interpolants and wavelets
from Fourier multiplier operators, Riesz-basis certification, and a
periodic-box multiscale transform.
"""

from .errors import *  # noqa: F401,F403
from .lattice import DilationMatrix, build_dilation, frequency_grid, parse_dilation
from .symbols import make_operator, parse_operator
from .localization import make_localization
from .splines import (bspline_spectrum, cardinal_samples, interpolant_spectrum, m_function,
                      periodized_power_sum, riesz_bounds)
from .wavelets import (coset_energies, gramian, gramian_extremes, orthogonality_residual,
                       riesz_basis_test, wavelet_spectrum)
from .band import SignalField, sample_function
from .transform import Pyramid, analyze, approximation_error, build_system, synthesize
from .experiments import (NoiseSpec, approx_order_fit, decorrelation_curve,
                          discrete_sum_bounds, sample_sparse_process, sparsity_report)
from .io import read_field, read_pyramid, read_signal, write_field, write_pyramid, \
    write_report, write_signal

__version__ = "0.1.0"
