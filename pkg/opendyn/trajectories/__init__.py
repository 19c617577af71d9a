"""Stochastic trajectories: telegraph-noise Schrödinger, AME jumps and the hybrid model."""
from opendyn.trajectories.ensemble import (
    EnsembleSpec,
    FluctuatorNoise,
    TrajectoryResult,
    TrajectorySample,
    run_ensemble,
    trajectory_rng,
)
from opendyn.trajectories.fluctuator import path_segments, solve_stochastic_schrodinger
from opendyn.trajectories.jumps import solve_ame_trajectory
from opendyn.trajectories.hybrid import solve_hybrid
