"""opendyn - open quantum system dynamics for time-dependent Hamiltonians."""

import warnings

# scipy.integrate.quad reports slow convergence as a warning; the quadrature
# wrappers inspect the returned error estimate themselves.
warnings.filterwarnings("ignore", message=".*The occurrence of roundoff error.*")
warnings.filterwarnings("ignore", message=".*The maximum number of subdivisions.*")

__version__ = "0.3.0"
