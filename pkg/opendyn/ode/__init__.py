"""Adaptive ODE integration with dense output, forced stops and callbacks."""
from opendyn.ode.solution import OdeSolution
from opendyn.ode.integrator import IntegratorConfig, integrate, integrate_fixed
from opendyn.ode.callbacks import PositivityCallback, positivity_callback
