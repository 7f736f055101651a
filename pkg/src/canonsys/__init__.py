"""canonsys: random canonical systems at desk scale.

The stochastic Airy operator (embedded as a canonical system through an
explicit time change) and the stochastic sine operator share one spectral
frame here: coefficient matrices, transfer matrices, Weyl--Titchmarsh
functions and spectral measures.  The experiments module couples the two
operators pathwise and verifies the convergence laws by Monte Carlo.
"""

__version__ = "0.1.0"

from . import airy, canonical, experiments, integrate, paths, sine, specfun, stats  # noqa: F401
from .errors import CanonsysError  # noqa: F401
