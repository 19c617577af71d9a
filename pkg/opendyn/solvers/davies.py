"""
Adiabatic master equation in Davies form and its one-sided variant.

Lindblad operators live in the instantaneous eigenbasis of H(s):
L_{ω,α} = Σ_{ε_b−ε_a=ω} ⟨ψ_a|A_α|ψ_b⟩ |ψ_a⟩⟨ψ_b|, with ω grouped after
rounding to a fixed number of significant digits.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from opendyn.ode import IntegratorConfig, OdeSolution
from opendyn.operators.hamiltonian import EigenDecomposition
from opendyn.solvers.lamb_shift import SpectrumCache
from opendyn.solvers.problem import EvolutionProblem, require_density_matrix, run_integration
from opendyn.utils.linalg import dag, hermitize

logger = logging.getLogger(__name__)

Channel = Tuple[float, np.ndarray]


def round_significant(x: np.ndarray, digits: int, floor: float = 0.0) -> np.ndarray:
    """Round to `digits` significant digits; |x| below `floor` becomes 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    keep = np.abs(x) > floor
    if np.any(keep):
        mags = np.floor(np.log10(np.abs(x[keep])))
        factor = 10.0 ** (digits - 1 - mags)
        out[keep] = np.round(x[keep] * factor) / factor
    return out


def bohr_frequencies(energies: np.ndarray, digits: int) -> np.ndarray:
    """ω_ab = ε_b − ε_a, rounded for grouping."""
    gaps = energies[np.newaxis, :] - energies[:, np.newaxis]
    floor = 10.0 ** (-digits) * max(np.max(np.abs(energies)), 1e-300)
    return round_significant(gaps, digits, floor)


class DaviesModel:
    """Eigenbasis, Bohr frequencies and rates of a problem at a given time."""

    def __init__(self, p: EvolutionProblem, lamb_shift: bool = True):
        self.p = p
        self.lamb_shift = lamb_shift
        self.lvl = p.lvl()
        self.digits = p.options.omega_digits
        self.caches = [SpectrumCache(inter.bath, p.options.omega_hint, lamb_shift) for inter in p.interactions]

    def eigenbasis(self, t: float) -> Tuple[EigenDecomposition, np.ndarray]:
        eig = self.p.hamiltonian.eigendecompose(self.p.s_of(t), self.lvl)
        return eig, bohr_frequencies(eig.energies, self.digits)

    def terms(self, t: float) -> Tuple[np.ndarray, List[Channel]]:
        """(H_LS, [(γ(ω), L_ω,α)]) at time t."""
        eig, omegas = self.eigenbasis(t)
        v = eig.vectors
        d = self.p.dimension
        h_ls = np.zeros((d, d), dtype=complex)
        channels: List[Channel] = []
        s = self.p.s_of(t)
        unique = np.unique(omegas)
        for inter, cache in zip(self.p.interactions, self.caches):
            for alpha in range(len(inter.couplings)):
                a_e = dag(v) @ inter.couplings.operator(alpha, s) @ v
                for w in unique:
                    l_e = np.where(omegas == w, a_e, 0.0)
                    if not np.any(np.abs(l_e) > 0.0):
                        continue
                    l_op = v @ l_e @ dag(v)
                    channels.append((cache.gamma(float(w)), l_op))
                    if self.lamb_shift:
                        h_ls += cache.shift(float(w)) * (dag(l_op) @ l_op)
        return hermitize(h_ls), channels

    def one_sided_lambdas(self, t: float) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(A_α, Λ_α) with Λ_α = Σ_ab Γ(ε_b−ε_a)⟨a|A_β|b⟩|a⟩⟨b|, Γ = γ/2 + iS."""
        eig, omegas = self.eigenbasis(t)
        v = eig.vectors
        s = self.p.s_of(t)
        unique, inverse = np.unique(omegas, return_inverse=True)
        inverse = inverse.reshape(omegas.shape)
        out = []
        for inter, cache in zip(self.p.interactions, self.caches):
            rates = np.array([0.5 * cache.gamma(float(w)) for w in unique], dtype=complex)
            if self.lamb_shift:
                rates += 1j * np.array([cache.shift(float(w)) for w in unique])
            big_gamma = rates[inverse]
            for alpha in range(len(inter.couplings)):
                beta = inter.couplings.partner(alpha)
                a_e = dag(v) @ inter.couplings.operator(beta, s) @ v
                out.append((inter.couplings.operator(alpha, s), v @ (big_gamma * a_e) @ dag(v)))
        return out


def davies_terms(p: EvolutionProblem, s: float, lamb_shift: bool = True) -> Tuple[np.ndarray, List[Channel]]:
    """Lamb-shift Hamiltonian and (rate, Lindblad operator) channels at dimensionless time s."""
    return DaviesModel(p, lamb_shift).terms(s * p.t_f)


def davies_dissipator(rho: np.ndarray, channels: List[Channel]) -> np.ndarray:
    out = np.zeros_like(rho)
    for rate, l_op in channels:
        if rate == 0.0:
            continue
        ld = dag(l_op)
        ldl = ld @ l_op
        out += rate * (l_op @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl))
    return out


class AMEGenerator:
    def __init__(self, p: EvolutionProblem, lamb_shift: bool = True):
        self.p = p
        self.model = DaviesModel(p, lamb_shift)

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        h = self.p.hamiltonian_at(t)
        if self.p.interactions:
            h_ls, channels = self.model.terms(t)
            h = h + h_ls
        else:
            channels = []
        return -1j * (h @ rho - rho @ h) + davies_dissipator(rho, channels)


class OneSidedAMEGenerator:
    def __init__(self, p: EvolutionProblem, lamb_shift: bool = True):
        self.p = p
        self.model = DaviesModel(p, lamb_shift)

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        h = self.p.hamiltonian_at(t)
        out = -1j * (h @ rho - rho @ h)
        if not self.p.interactions:
            return out
        for a, lam in self.model.one_sided_lambdas(t):
            lr = lam @ rho
            rl = rho @ dag(lam)
            ad = dag(a)
            out += -(a @ lr - lr @ a) + (ad @ rl - rl @ ad)
        return out


def _lamb_default(p: EvolutionProblem) -> bool:
    return True if p.options.lamb_shift is None else p.options.lamb_shift


def solve_ame(p: EvolutionProblem, cfg: Optional[IntegratorConfig] = None) -> OdeSolution:
    """Davies-form AME; Lamb shift on unless the options turn it off."""
    require_density_matrix(p, "solve_ame")
    gen = AMEGenerator(p, _lamb_default(p))
    return run_integration("ame", p, gen, p.u0, cfg, "matrix", metadata={"lvl": gen.model.lvl})


def solve_onesided_ame(p: EvolutionProblem, cfg: Optional[IntegratorConfig] = None) -> OdeSolution:
    """One-sided AME; not completely positive, so the positivity check aborts by default."""
    require_density_matrix(p, "solve_onesided_ame")
    gen = OneSidedAMEGenerator(p, _lamb_default(p))
    return run_integration("onesided_ame", p, gen, p.u0, cfg, "matrix", positivity="abort",
                           metadata={"lvl": gen.model.lvl})
