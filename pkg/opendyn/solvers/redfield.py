"""
Redfield (TCL2) master equation.

    ρ̇ = −i[H, ρ] − Σ_α [A_α, Λ_α ρ] + h.c.
    Λ_α(t) = ∫_{max(0, t−T_a)}^{t} C(t−τ) U(t, τ) A_β(τ) U†(t, τ) dτ

with β the partner of α (α itself for Hermitian couplings, the other
member of a σ± pair in the polaron frame).
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from opendyn.ode import IntegratorConfig, OdeSolution
from opendyn.solvers.kernels import (
    KernelTable,
    bath_timescales,
    correlation_table,
    gauss_nodes,
    kernel_scale,
    panel_edges,
)
from opendyn.solvers.problem import (
    Couplings,
    EvolutionProblem,
    caveat,
    coupling_stack,
    require_density_matrix,
    run_integration,
)
from opendyn.solvers.propagator import PropagatorCache
from opendyn.utils.linalg import dag
from opendyn.utils.tracer import get_tracer

logger = logging.getLogger(__name__)

# kernels are tabulated this many bath memory times before truncation
TABLE_SPAN = 50.0


@dataclass
class MemoryTerm:
    """One interaction prepared for the memory integral."""

    couplings: Couplings
    table: KernelTable
    t_a: float
    fine: float
    coarse: float


def prepare_memory_terms(
    p: EvolutionProblem,
    t_a: Optional[float],
    rtol: float,
) -> Tuple[List[MemoryTerm], float]:
    """
    Tabulate C for every interaction and fix its truncation time.

    Returns the terms and the propagator grid spacing they need.
    """
    terms = []
    spacing = np.inf
    tracer = get_tracer()
    for inter in p.interactions:
        bath = inter.bath
        ts = bath_timescales(bath)
        tracer.log_timescales(ts.tau_sb, ts.tau_b)
        scale = kernel_scale(bath)
        if t_a is None:
            span = min(max(TABLE_SPAN * ts.tau_b, 40.0 * scale), p.t_f)
            table = correlation_table(bath, span)
            window = min(table.truncation_time(rtol), p.t_f)
        else:
            window = min(t_a, p.t_f)
            table = correlation_table(bath, window)
        logger.debug("%s: T_a=%.4g ns (tau_B=%.4g, tau_SB=%.4g)", bath.name, window, ts.tau_b, ts.tau_sb)
        terms.append(MemoryTerm(inter.couplings, table, window, scale, 0.25 * ts.tau_b))
        spacing = min(spacing, 0.1 * ts.tau_b)
    return terms, spacing


class RedfieldGenerator:
    """Callable right-hand side; also exposes Λ_α(t) for inspection."""

    def __init__(self, p: EvolutionProblem, t_a: Optional[float] = None, cfg: Optional[IntegratorConfig] = None):
        cfg = cfg or IntegratorConfig()
        self.p = p
        self.order = p.options.gauss_order
        self.terms, spacing = prepare_memory_terms(p, t_a if t_a is not None else p.options.t_a, cfg.reltol)
        self.cache = (
            PropagatorCache(p, spacing=spacing if np.isfinite(spacing) else None, tstops=cfg.tstops)
            if self.terms else None
        )

    def lambdas(self, t: float) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(A_α(t), Λ_α(t)) for every coupling operator."""
        out = []
        if not self.terms:
            return out
        u_t = self.cache(t)
        s = self.p.s_of(t)
        for term in self.terms:
            edges = panel_edges(min(t, term.t_a), term.fine, term.coarse)
            lags, weights = gauss_nodes(edges, self.order)
            kernel = weights * term.table(lags)
            taus = t - lags
            framed = {}
            for alpha in range(len(term.couplings)):
                beta = term.couplings.partner(alpha)
                if beta not in framed:
                    ops = coupling_stack(term.couplings, beta, taus, self.p.t_f)
                    lam = np.tensordot(kernel, self.cache.to_cache_frame(ops, taus), axes=1) if len(lags) else 0.0
                    framed[beta] = u_t @ lam @ dag(u_t)
                out.append((term.couplings.operator(alpha, s), framed[beta]))
        return out

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        h = self.p.hamiltonian_at(t)
        out = -1j * (h @ rho - rho @ h)
        for a, lam in self.lambdas(t):
            lr = lam @ rho
            rl = rho @ dag(lam)
            ad = dag(a)
            out += -(a @ lr - lr @ a) + (ad @ rl - rl @ ad)
        return out


def redfield_rhs(t: float, rho: np.ndarray, generator: RedfieldGenerator) -> np.ndarray:
    return generator(t, rho)


def solve_redfield(
    p: EvolutionProblem,
    cfg: Optional[IntegratorConfig] = None,
    t_a: Optional[float] = None,
) -> OdeSolution:
    """
    Integrate the Redfield equation. `t_a=None` truncates the memory where
    the tail of ∫|C| drops below the integrator's relative tolerance.

    The positivity check aborts by default. The Lamb shift is part of the
    memory integral, so `lamb_shift` has no effect here.
    """
    require_density_matrix(p, "solve_redfield")
    diagnostics: List[str] = []
    if p.options.lamb_shift is not None:
        caveat(f"lamb_shift={p.options.lamb_shift} ignored: Redfield always includes the Lamb shift", diagnostics)
    gen = RedfieldGenerator(p, t_a, cfg)
    meta = {"t_a": [term.t_a for term in gen.terms]}
    return run_integration(
        "redfield", p, gen, p.u0, cfg, "matrix", positivity="abort", diagnostics=diagnostics, metadata=meta
    )
