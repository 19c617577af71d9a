"""
Hybrid classical-quantum noise: per trajectory

    ρ̇ = −i[H_S(t) + Σ_α δ_α(t)A_α, ρ] + D(ρ)

with D the AME or Redfield dissipator of the quantum bath, built from the
noiseless H_S and shared by all trajectories.
"""

import logging
from typing import Optional

import numpy as np

from opendyn.solvers.davies import AMEGenerator
from opendyn.solvers.redfield import RedfieldGenerator
from opendyn.trajectories.ensemble import (
    EnsembleSpec,
    TrajectoryResult,
    TrajectorySample,
    run_ensemble,
    trajectory_kind,
)
from opendyn.trajectories.fluctuator import noise_hamiltonian, path_segments, run_segments, sample_paths
from opendyn.utils.linalg import ket_to_dm

logger = logging.getLogger(__name__)


@trajectory_kind("hybrid")
def hybrid_runner(spec: EnsembleSpec):
    p = spec.problem
    if spec.backend == "ame":
        lamb = True if p.options.lamb_shift is None else p.options.lamb_shift
        generator = AMEGenerator(p, lamb)
    else:
        generator = RedfieldGenerator(p, cfg=spec.cfg)
    grid = np.asarray(spec.saveat)
    noise_h = noise_hamiltonian(spec)

    def make_rhs(values):
        extra = noise_h(values)

        def rhs(t, rho):
            return generator(t, rho) - 1j * (extra @ rho - rho @ extra)
        return rhs

    def run_one(rng: np.random.Generator) -> TrajectorySample:
        state = spec.initial_state(rng)
        rho0 = ket_to_dm(state) if state.ndim == 1 else state
        segments = path_segments(sample_paths(spec, rng), p.t_f)
        return run_segments(make_rhs, rho0, segments, grid, spec.cfg, "matrix")

    return run_one


def solve_hybrid(spec: EnsembleSpec, backend: Optional[str] = None, workers: Optional[int] = None) -> TrajectoryResult:
    """Ensemble-averaged density matrix of the hybrid model; `backend` overrides spec.backend."""
    update = {"kind": "hybrid"}
    if backend is not None:
        update["backend"] = backend
    if not spec.problem.interactions:
        logger.debug("hybrid run without a quantum bath reduces to fluctuator-only dynamics")
    return run_ensemble(spec.model_copy(update=update), workers)
