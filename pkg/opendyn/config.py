"""Configuration management for opendyn."""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _float(name: str, default: float) -> float:
    return float(os.getenv(name, str(default)))


def _int(name: str, default: int) -> int:
    return int(os.getenv(name, str(default)))


# Base paths (created lazily by the output writer)
BASE_DIR = Path(__file__).resolve().parent.parent
CONFIG_DIR = BASE_DIR / "configs"
OUTPUT_DIR = Path(os.getenv("OPENDYN_OUTPUT_DIR", str(BASE_DIR / "output")))

# Physical constants
# Boltzmann constant over Planck constant, GHz per kelvin
KB_OVER_H_GHZ_PER_K = 20.837

# Quadrature
QUAD_ABS_TOL = _float("OPENDYN_QUAD_ABS_TOL", 1e-10)
QUAD_REL_TOL = _float("OPENDYN_QUAD_REL_TOL", 1e-8)
QUAD_LIMIT = _int("OPENDYN_QUAD_LIMIT", 200)

# ODE integration
DEFAULT_RELTOL = _float("OPENDYN_RELTOL", 1e-6)
DEFAULT_ABSTOL = _float("OPENDYN_ABSTOL", 1e-8)
DEFAULT_MAX_STEPS = _int("OPENDYN_MAX_STEPS", 1_000_000)

# Master equations
OMEGA_DIGITS = _int("OPENDYN_OMEGA_DIGITS", 8)
GAUSS_ORDER = _int("OPENDYN_GAUSS_ORDER", 8)
POSITIVITY_THRESHOLD = _float("OPENDYN_POSITIVITY_THRESHOLD", 1e-6)
CGME_REL_TOL = _float("OPENDYN_CGME_REL_TOL", 1e-6)

# Adiabatic frame
ADIABATIC_GRID_POINTS = _int("OPENDYN_ADIABATIC_GRID_POINTS", 1001)

# Noise
DEFAULT_FLUCTUATORS = _int("OPENDYN_DEFAULT_FLUCTUATORS", 10)

# Dense-representation ceiling
MAX_QUBITS = 20

# Debug/Trace mode - set to True to echo solver traces on the console
DEBUG_MODE = os.getenv("OPENDYN_DEBUG", "false").lower() in ("true", "1", "yes")
