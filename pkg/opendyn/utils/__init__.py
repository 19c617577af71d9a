"""Utility modules."""
from opendyn.utils.tracer import Tracer, get_tracer, trace_enabled
