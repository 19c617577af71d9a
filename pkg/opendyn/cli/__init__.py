"""Config-driven front end: schemas, problem assembly, runs, rate sweeps and outputs."""
from opendyn.cli.schemas import ErrorResponse, RunConfig, RunResponse, SweepResponse
from opendyn.cli.builders import build_run, build_schedule, coupling_from_string
from opendyn.cli.rate_fit import RateFitResult, RateSweepResult, fit_biexponential, rate_sweep
from opendyn.cli.outputs import emit_outputs, solution_table
from opendyn.cli.service import RunService, apply_overrides, load_config
