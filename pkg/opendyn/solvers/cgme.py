"""
Coarse-grained master equation.

The generator at time t averages the Redfield generator over the window
[t − T_a/2, t + T_a/2]:

    D(ρ) = (1/T_a) ∫∫ C(t₂−t₁) [A₁ ρ A₂ − ½{A₂A₁, ρ}] dt₁ dt₂
    H_LS = (i/2T_a) ∫∫ sgn(t₁−t₂) C(t₂−t₁) A₂A₁ dt₁ dt₂

with A_k = U†(t+t_k, t) A(t+t_k) U(t+t_k, t). The square is folded onto
the triangle t₂ < t₁ and integrated in (lag, position) coordinates with
scipy's adaptive cubature. The generator is built on a time grid and
interpolated in between.
"""

import logging
from typing import Optional

import numpy as np
from scipy.integrate import cubature
from scipy.interpolate import make_interp_spline

from opendyn.config import CGME_REL_TOL
from opendyn.errors import QuadratureError
from opendyn.ode import IntegratorConfig, OdeSolution
from opendyn.solvers.kernels import bath_timescales, correlation_table
from opendyn.solvers.problem import EvolutionProblem, coupling_stack, require_density_matrix, run_integration
from opendyn.solvers.propagator import PropagatorCache
from opendyn.utils.linalg import dag, hermitize, spost, spre
from opendyn.utils.tracer import get_tracer

logger = logging.getLogger(__name__)

MAX_GENERATOR_POINTS = 401


def auto_coarse_graining_time(p: EvolutionProblem) -> float:
    """√(τ_B·τ_SB) of the most strongly coupled bath, capped at t_f."""
    best = np.inf
    for inter in p.interactions:
        ts = bath_timescales(inter.bath)
        best = min(best, np.sqrt(ts.tau_b * ts.tau_sb))
    return float(min(best, p.t_f))


class CGMEGenerator:
    """Superoperator L(t) acting on row-major vec(ρ)."""

    def __init__(self, p: EvolutionProblem, t_a: Optional[float] = None, cfg: Optional[IntegratorConfig] = None):
        cfg = cfg or IntegratorConfig()
        if any(not inter.couplings.hermitian for inter in p.interactions):
            raise ValueError("the CGME solver needs Hermitian coupling operators")
        self.p = p
        self.d = p.dimension
        self.t_a = float(t_a or p.options.t_a or auto_coarse_graining_time(p)) if p.interactions else 0.0
        self.rtol = CGME_REL_TOL
        self._constant = None
        self._spline = None
        if not p.interactions:
            return

        half = 0.5 * self.t_a
        spacing = min(0.1 * bath_timescales(inter.bath).tau_b for inter in p.interactions)
        self.cache = PropagatorCache(p, -half, p.t_f + half, spacing=spacing, tstops=cfg.tstops)
        self.tables = [correlation_table(inter.bath, self.t_a) for inter in p.interactions]
        self.splits = [min(10.0 * bath_timescales(inter.bath).tau_b, self.t_a) for inter in p.interactions]
        get_tracer().log("SOLVER", f"CGME coarse-graining time {self.t_a:.4g} ns")
        logger.debug("CGME lag split points %s", self.splits)

        n = p.options.cgme_grid
        if n is None:
            n = int(np.clip(np.ceil(2.0 * p.t_f / self.t_a) + 1, 4, MAX_GENERATOR_POINTS))
        if n == 1:
            self._constant = self.dissipator_at(0.5 * p.t_f)
        else:
            times = np.linspace(0.0, p.t_f, n)
            gens = np.stack([self.dissipator_at(t) for t in times])
            self._spline = make_interp_spline(times, gens, k=min(3, n - 1))

    def _window_integrals(self, t: float, couplings, alpha: int, table, split: float):
        """∫ over the folded triangle of the jump, anticommutator and Lamb-shift kernels."""
        d = self.d
        t_a = self.t_a
        lo = -0.5 * t_a
        n_jump, n_op = d**4, d**2

        def integrand(x):
            lag, v = x[:, 0], x[:, 1]
            t1 = lo + lag + (t_a - lag) * v
            t2 = t1 - lag
            jac = t_a - lag
            taus1, taus2 = t + t1, t + t2
            a1 = self.cache.to_cache_frame(coupling_stack(couplings, alpha, taus1, self.p.t_f), taus1)
            a2 = self.cache.to_cache_frame(coupling_stack(couplings, alpha, taus2, self.p.t_f), taus2)
            c_pos = table(lag) * jac
            c_neg = np.conj(c_pos)
            a2t, a1t = np.swapaxes(a2, 1, 2), np.swapaxes(a1, 1, 2)
            jump = (c_neg[:, None, None, None, None] * np.einsum("nij,nkl->nikjl", a1, a2t)
                    + c_pos[:, None, None, None, None] * np.einsum("nij,nkl->nikjl", a2, a1t))
            a21, a12 = a2 @ a1, a1 @ a2
            anti = c_neg[:, None, None] * a21 + c_pos[:, None, None] * a12
            ls = 0.5j * (c_neg[:, None, None] * a21 - c_pos[:, None, None] * a12)
            flat = np.concatenate([jump.reshape(len(lag), n_jump), anti.reshape(len(lag), n_op),
                                   ls.reshape(len(lag), n_op)], axis=1)
            return np.concatenate([flat.real, flat.imag], axis=1)

        total = None
        scale = abs(table(0.0)) * np.max(np.abs(couplings.operator(alpha, self.p.s_of(t)))) ** 2 * t_a**2
        atol = 1e-3 * self.rtol * max(scale, 1e-300)
        for a, b in ((0.0, split), (split, t_a)):
            if not b > a:
                continue
            res = cubature(integrand, [a, 0.0], [b, 1.0], rule="genz-malik", rtol=self.rtol, atol=atol)
            if res.status != "converged":
                raise QuadratureError(
                    f"CGME window integral did not converge at t={t:.6g} ns",
                    {"t": t, "error": float(np.max(res.error))},
                )
            total = res.estimate if total is None else total + res.estimate
        half = total.shape[0] // 2
        flat = total[:half] + 1j * total[half:]
        jump = flat[:n_jump].reshape(d * d, d * d)
        anti = flat[n_jump:n_jump + n_op].reshape(d, d)
        ls = flat[n_jump + n_op:].reshape(d, d)
        return jump / t_a, anti / t_a, ls / t_a

    def dissipator_at(self, t: float) -> np.ndarray:
        """Bath part of the generator (dissipator and Lamb shift) at time t."""
        u = self.cache(t)
        w = np.kron(u, u.conj())
        d2 = self.d * self.d
        gen = np.zeros((d2, d2), dtype=complex)
        for inter, table, split in zip(self.p.interactions, self.tables, self.splits):
            for alpha in range(len(inter.couplings)):
                jump, anti, ls = self._window_integrals(t, inter.couplings, alpha, table, split)
                anti = u @ anti @ dag(u)
                h_ls = hermitize(u @ ls @ dag(u))
                gen = gen + w @ jump @ dag(w) - 0.5 * (spre(anti) + spost(anti)) - 1j * (spre(h_ls) - spost(h_ls))
        return gen

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        h = self.p.hamiltonian_at(t)
        out = -1j * (h @ rho - rho @ h)
        if not self.p.interactions:
            return out
        gen = self._constant if self._spline is None else self._spline(t)
        return out + (gen @ rho.reshape(-1)).reshape(rho.shape)


def solve_cgme(
    p: EvolutionProblem,
    cfg: Optional[IntegratorConfig] = None,
    t_a: Optional[float] = None,
) -> OdeSolution:
    """Coarse-grained ME; `t_a=None` uses √(τ_B·τ_SB)."""
    require_density_matrix(p, "solve_cgme")
    gen = CGMEGenerator(p, t_a, cfg)
    return run_integration("cgme", p, gen, p.u0, cfg, "matrix", metadata={"t_a": gen.t_a})
