"""Run Service Layer - config loading, solver dispatch, diagnostics and outputs."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import ValidationError

from opendyn.bath import error_bound_estimate, polaron_timescales, timescales
from opendyn.cli.builders import BuiltRun, build_ensemble_spec, build_observables, build_run
from opendyn.cli.outputs import Table, emit_outputs, solution_metadata, solution_table
from opendyn.cli.rate_fit import RateSweepResult, rate_sweep
from opendyn.cli.schemas import POLARON_SOLVERS, RunConfig, RunResponse, SweepResponse, SweepRow
from opendyn.config import OUTPUT_DIR
from opendyn.errors import ConfigError, OpenDynError, PositivityAbort, SolverError
from opendyn.ode import OdeSolution
from opendyn.operators.hamiltonian import TWO_PI
from opendyn.adiabatic import solve_in_adiabatic_frame, to_adiabatic_frame
from opendyn.solvers.registry import ENSEMBLE_SOLVERS, FRAME_SOLVERS, get_solver
from opendyn.trajectories import TrajectoryResult, solve_ame_trajectory, solve_hybrid, solve_stochastic_schrodinger
from opendyn.utils.tracer import get_tracer

logger = logging.getLogger(__name__)

Result = Union[OdeSolution, TrajectoryResult]

ENSEMBLE_DRIVERS = {
    "stochastic_schrodinger": solve_stochastic_schrodinger,
    "ame_trajectory": solve_ame_trajectory,
    "hybrid": solve_hybrid,
}

# Error-bound family per solver name.
BOUND_KIND = {
    "redfield": "redfield",
    "onesided_ame": "redfield",
    "ame": "davies",
    "ame_trajectory": "davies",
    "hybrid": "davies",
    "cgme": "cgme",
    "ule": "cgme",
    "ptre": "ptre",
    "ptre_lindblad": "ptre",
    "ptre_onesided": "ptre",
}


# ============================================
# CONFIG LOADING
# ============================================

def load_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a JSON run config; custom bath paths become absolute."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc.strerror or exc}", {"path": str(path)}) from exc
    try:
        config = RunConfig.model_validate_json(text)
    except ValidationError as exc:
        errors = json.loads(exc.json(include_url=False))
        raise ConfigError(f"invalid run configuration '{path}'", {"path": str(path), "errors": errors}) from exc
    if config.bath is not None and config.bath.type == "custom":
        bath_path = Path(config.bath.path)
        if not bath_path.is_absolute():
            bath_path = (path.parent / bath_path).resolve()
            config = config.model_copy(update={"bath": config.bath.model_copy(update={"path": str(bath_path)})})
    return config


def apply_overrides(config: RunConfig, seed: Optional[int] = None, workers: Optional[int] = None) -> RunConfig:
    """Command-line --seed and --workers on top of the validated config."""
    if config.ensemble is None:
        if seed is not None or workers is not None:
            logger.debug("--seed/--workers ignored: %s is deterministic", config.solver.name)
        return config
    update: Dict[str, Any] = {}
    if seed is not None:
        if seed < 0:
            raise ConfigError("--seed must be non-negative", {"seed": seed})
        update["seed"] = seed
    if workers is not None:
        if workers < 1:
            raise ConfigError("--workers must be >= 1", {"workers": workers})
        update["workers"] = workers
    return config.model_copy(update={"ensemble": config.ensemble.model_copy(update=update)})


class RunService:
    """Assembles, solves and writes one configured run."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.tracer = get_tracer()

    # ============================================
    # BUILD AND SOLVE
    # ============================================

    def build(self) -> BuiltRun:
        try:
            run = build_run(self.config)
        except (ValueError, OSError) as exc:
            raise ConfigError(f"cannot assemble the problem: {exc}", {"solver": self.config.solver.name}) from exc
        p = run.problem
        n_couplings = sum(len(inter.couplings) for inter in p.interactions)
        self.tracer.log_problem(p.dimension, n_couplings, p.t_f)
        if run.bath is not None:
            self.tracer.log_bath(run.bath.name, run.bath.describe())
        return run

    def solve(self, run: BuiltRun) -> Result:
        name = self.config.solver.name
        p = run.problem
        try:
            if name in ENSEMBLE_SOLVERS:
                return ENSEMBLE_DRIVERS[name](build_ensemble_spec(run))
            if name in FRAME_SOLVERS:
                grid = np.linspace(0.0, 1.0, self.config.solver.frame_grid)
                frame = to_adiabatic_frame(p.hamiltonian, p.t_f, p.lvl(), grid)
                kind = "schrodinger" if p.is_vector else "von_neumann"
                return solve_in_adiabatic_frame(p, kind, run.cfg, frame)
            return get_solver(name)(p, run.cfg)
        except OpenDynError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}", {"solver": name}) from exc

    @staticmethod
    def check(result: Result):
        """Raise the exception matching a failed run."""
        if isinstance(result, TrajectoryResult):
            if not result.success:
                raise SolverError("every trajectory failed", {"failures": result.failures[:5]})
            return
        if result.status == "negative-state":
            raise PositivityAbort(result.message or "density matrix lost positivity",
                                  {"t": float(result.t[-1]) if len(result.t) else 0.0,
                                   "positivity": result.metadata.get("positivity")})
        if not result.success:
            raise SolverError(result.message or f"integration stopped: {result.status}", {"status": result.status})

    # ============================================
    # DIAGNOSTICS
    # ============================================

    def diagnostics(self, run: BuiltRun) -> Dict[str, Any]:
        """Bath timescales and the error-bound estimate at t_f."""
        if not self.config.output.diagnostics or run.bath is None:
            return {}
        name = self.config.solver.name
        p = run.problem
        out: Dict[str, Any] = {}
        try:
            if name in POLARON_SOLVERS:
                inter = p.interactions[0]
                amp = max(abs(inter.couplings.amplitude(s)) for s in np.linspace(0.0, 1.0, 101))
                ts = polaron_timescales(inter.bath, p.t_f, TWO_PI * amp)
            else:
                ts = timescales(run.bath, p.t_f)
            self.tracer.log_timescales(ts.tau_sb, ts.tau_b)
            out["timescales"] = ts.model_dump()
            kind = BOUND_KIND.get(name)
            if kind is not None:
                gap = None
                if kind == "davies":
                    gap = min(
                        float(np.diff(p.hamiltonian.eigendecompose(float(s), 2).energies)[0])
                        for s in np.linspace(0.0, 1.0, 101)
                    )
                with np.errstate(over="ignore"):
                    out["error_bound"] = {"kind": kind, "t": p.t_f,
                                          "value": error_bound_estimate(kind, ts, p.t_f, gap)}
        except (OpenDynError, ValueError) as exc:
            logger.warning("bath diagnostics unavailable: %s", exc)
            out["error"] = str(exc)
        return out

    def metadata(self, run: BuiltRun, result: Result) -> Dict[str, Any]:
        config = self.config
        if isinstance(result, TrajectoryResult):
            # record the seed actually used so the sidecar replays the same ensemble
            config = config.model_copy(update={"ensemble": config.ensemble.model_copy(update={"seed": result.seed})})
        cfg = run.cfg
        return {
            "solver": self.config.solver.name,
            "tolerances": {"reltol": cfg.reltol, "abstol": cfg.abstol, "method": cfg.method,
                           "max_steps": cfg.max_steps, "dt": cfg.dt},
            "seeds": {
                "ensemble": result.seed if isinstance(result, TrajectoryResult) else None,
                "fluctuators": [fl.seed for fl in (config.ensemble.fluctuators if config.ensemble else [])],
            },
            "problem": {"dimension": run.problem.dimension, "t_f": run.problem.t_f, "tstops": cfg.tstops},
            "solution": solution_metadata(result),
            "diagnostics": self.diagnostics(run),
            "config": config.model_dump(mode="json"),
        }

    # ============================================
    # ENTRY POINTS
    # ============================================

    def output_dir(self, override: Optional[Union[str, Path]] = None) -> Path:
        if override is not None:
            return Path(override)
        if self.config.output.directory:
            return Path(self.config.output.directory)
        return OUTPUT_DIR

    def run(self, output_dir: Optional[Union[str, Path]] = None) -> RunResponse:
        run = self.build()
        result = self.solve(run)
        if isinstance(result, TrajectoryResult):
            self.check(result)
        output = self.config.output
        observables = build_observables(output.observables, self.config.problem.n_qubits)
        header, rows = solution_table(result, observables, output.populations)
        paths = emit_outputs(self.output_dir(output_dir), output.prefix, header, rows, self.metadata(run, result))
        self.check(result)
        warnings = list(result.metadata.get("warnings", []))
        return RunResponse(
            solver=self.config.solver.name,
            status=getattr(result, "status", "success"),
            message=getattr(result, "message", ""),
            rows=len(rows),
            csv_path=str(paths["csv"]),
            metadata_path=str(paths["metadata"]),
            warnings=warnings,
        )

    def point_config(self, h_p: float, tau2: float) -> RunConfig:
        """Copy of the config with the witness probe field and pause replaced; final state only."""
        config = self.config.model_copy(deep=True)
        for term in config.problem.hamiltonian:
            if term.builder == "witness":
                term.witness = term.witness.model_copy(update={"h_p": h_p, "tau2": tau2})
        config.problem.t_f = None
        config.solver.saveat = None
        config.solver.save_points = 1
        config.output.diagnostics = False
        return config

    def final_population(self, h_p: float, tau2: float, index: int) -> float:
        service = RunService(self.point_config(h_p, tau2))
        result = service.solve(service.build())
        service.check(result)
        return float(result.populations()[-1][index])

    def rate_sweep(self, output_dir: Optional[Union[str, Path]] = None) -> SweepResponse:
        sweep = self.config.sweep
        if sweep is None:
            raise ConfigError("rate-sweep needs a 'sweep' section")
        n = self.config.problem.n_qubits
        target = sweep.target or "1" * n
        index = int(target, 2)
        result = rate_sweep(lambda h_p, tau2: self.final_population(h_p, tau2, index), sweep.h_p, sweep.tau2)

        header, rows = sweep_table(result)
        extra = {"populations": population_table(result)}
        metadata = {
            "solver": self.config.solver.name,
            "sweep": {"target": target, "h_p": sweep.h_p, "tau2": sweep.tau2},
            "fits": [row.model_dump() for row in sweep_rows(result)],
            "config": self.config.model_dump(mode="json"),
        }
        paths = emit_outputs(self.output_dir(output_dir), self.config.output.prefix, header, rows, metadata, extra)
        return SweepResponse(
            success=all(f.ok for f in result.fits),
            rows=sweep_rows(result),
            csv_path=str(paths["csv"]),
            populations_path=str(paths["populations"]),
            metadata_path=str(paths["metadata"]),
        )


# ============================================
# SWEEP TABLES
# ============================================

def sweep_rows(result: RateSweepResult):
    rows = []
    for f in result.fits:
        values = {k: (float(getattr(f, k)) if f.ok else None) for k in ("gamma", "a", "b", "c", "d", "residual")}
        rows.append(SweepRow(h_p=f.h_p, status=f.status, message=f.message, **values))
    return rows


def sweep_table(result: RateSweepResult) -> Table:
    header = ["h_p", "gamma", "a", "b", "c", "d", "residual"]
    rows = [[f.h_p, f.gamma, f.a, f.b, f.c, f.d, f.residual] for f in result.fits]
    return header, rows


def population_table(result: RateSweepResult) -> Table:
    if not result.fits:
        return ["tau2"], []
    tau2 = result.fits[0].tau2
    header = ["tau2"] + [f"P@{f.h_p!r}" for f in result.fits]
    rows = [[float(t)] + [float(f.populations[k]) for f in result.fits] for k, t in enumerate(tau2)]
    return header, rows
