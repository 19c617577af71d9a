"""
Universal Lindblad equation.

    L_α(t) = ∫ g(t−τ) U(t, τ) A_α(τ) U†(t, τ) dτ
    H_LS(t) = (1/2i) ∫∫ sgn(s−s′) g(s−t) g(t−s′) U(t,s)A(s)U(s,s′)A(s′)U†(t,s′) ds ds′

Both integrals run over [max(0, t−T_a), min(t_f, t+T_a)] because the
propagator is only known on [0, t_f].
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from opendyn.ode import IntegratorConfig, OdeSolution
from opendyn.solvers.kernels import KernelTable, bath_timescales, gauss_nodes, jump_table, kernel_scale, panel_edges
from opendyn.solvers.problem import (
    Couplings,
    EvolutionProblem,
    caveat,
    coupling_stack,
    require_density_matrix,
    run_integration,
)
from opendyn.solvers.propagator import PropagatorCache
from opendyn.solvers.redfield import TABLE_SPAN
from opendyn.utils.linalg import dag, hermitize

logger = logging.getLogger(__name__)


@dataclass
class JumpTerm:
    couplings: Couplings
    table: KernelTable
    t_a: float
    fine: float
    coarse: float


class ULEGenerator:
    """Lindblad-form right-hand side with time-dependent jump operators L_α(t)."""

    def __init__(self, p: EvolutionProblem, t_a: Optional[float] = None, cfg: Optional[IntegratorConfig] = None):
        cfg = cfg or IntegratorConfig()
        if any(not inter.couplings.hermitian for inter in p.interactions):
            raise ValueError("the ULE solver needs Hermitian coupling operators")
        self.p = p
        self.order = p.options.gauss_order
        self.diagnostics: List[str] = []
        t_a = t_a if t_a is not None else p.options.t_a
        self.terms: List[JumpTerm] = []
        spacing = np.inf
        for inter in p.interactions:
            bath = inter.bath
            ts = bath_timescales(bath)
            scale = kernel_scale(bath)
            span = min(max(TABLE_SPAN * ts.tau_b, 40.0 * scale), p.t_f)
            if t_a is None:
                table = jump_table(bath, span, p.options.ule_cutoff)
                window = table.truncation_time(cfg.reltol)
            else:
                window = float(t_a)
                table = jump_table(bath, max(span, window), p.options.ule_cutoff)
                lost = table.mass_outside(window)
                if lost > cfg.reltol:
                    caveat(
                        f"ULE window T_a={window:.4g} ns leaves {lost:.2e} of the jump correlation outside",
                        self.diagnostics,
                    )
            logger.debug("%s: ULE window %.4g ns", bath.name, window)
            self.terms.append(JumpTerm(inter.couplings, table, window, scale, 0.25 * ts.tau_b))
            spacing = min(spacing, 0.1 * ts.tau_b)
        self.cache = PropagatorCache(p, spacing=spacing, tstops=cfg.tstops) if self.terms else None

    def _nodes(self, t: float, term: JumpTerm) -> Tuple[np.ndarray, np.ndarray]:
        """Times τ and weights over the window, sorted by τ."""
        back = min(term.t_a, t)
        ahead = min(term.t_a, self.p.t_f - t)
        lag_b, w_b = gauss_nodes(panel_edges(back, term.fine, term.coarse), self.order)
        lag_a, w_a = gauss_nodes(panel_edges(ahead, term.fine, term.coarse), self.order)
        taus = np.concatenate([t - lag_b, t + lag_a])
        weights = np.concatenate([w_b, w_a])
        order = np.argsort(taus)
        return taus[order], weights[order]

    def terms_at(self, t: float) -> Tuple[np.ndarray, List[np.ndarray]]:
        """(H_LS(t), [L_α(t)])."""
        d = self.p.dimension
        h_ls = np.zeros((d, d), dtype=complex)
        jumps = []
        if not self.terms:
            return h_ls, jumps
        u_t = self.cache(t)
        for term in self.terms:
            taus, weights = self._nodes(t, term)
            if len(taus) == 0:
                continue
            g_fwd = weights * term.table(t - taus)
            g_bwd = weights * term.table(taus - t)
            for alpha in range(len(term.couplings)):
                framed = self.cache.to_cache_frame(coupling_stack(term.couplings, alpha, taus, self.p.t_f), taus)
                g_ops = g_fwd[:, None, None] * framed
                f_ops = g_bwd[:, None, None] * framed
                before = np.cumsum(g_ops, axis=0) - g_ops
                after = g_ops.sum(axis=0) - before - g_ops
                h_ls += np.einsum("nij,njk->ik", f_ops, before - after) / 2j
                jumps.append(u_t @ g_ops.sum(axis=0) @ dag(u_t))
        return u_t @ hermitize(h_ls) @ dag(u_t), jumps

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        h = self.p.hamiltonian_at(t)
        h_ls, jumps = self.terms_at(t)
        h = h + h_ls
        out = -1j * (h @ rho - rho @ h)
        for l_op in jumps:
            ld = dag(l_op)
            ldl = ld @ l_op
            out += l_op @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl)
        return out


def solve_ule(
    p: EvolutionProblem,
    cfg: Optional[IntegratorConfig] = None,
    t_a: Optional[float] = None,
) -> OdeSolution:
    """
    Integrate the ULE. `t_a=None` sizes the window from the decay of |g|;
    a user window that cuts off more than the relative tolerance of ∫|g|
    is reported as a warning.
    """
    require_density_matrix(p, "solve_ule")
    gen = ULEGenerator(p, t_a, cfg)
    meta = {"t_a": [term.t_a for term in gen.terms]}
    return run_integration("ule", p, gen, p.u0, cfg, "matrix", diagnostics=gen.diagnostics, metadata=meta)
