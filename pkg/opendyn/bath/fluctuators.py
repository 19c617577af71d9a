"""Telegraph fluctuators and 1/f noise synthesis."""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Union

import numpy as np

from opendyn.config import DEFAULT_FLUCTUATORS

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class FluctuatorEnsemble:
    """N telegraph processes switching between ±bᵢ with rates γᵢ (1/ns)."""

    amplitudes: np.ndarray
    rates: np.ndarray
    gamma_min: float
    gamma_max: float
    seed: Optional[int] = None

    def __post_init__(self):
        if len(self.amplitudes) != len(self.rates):
            raise ValueError("one amplitude per fluctuator rate is required")
        if not 0 < self.gamma_min <= self.gamma_max:
            raise ValueError(f"need 0 < gamma_min <= gamma_max, got [{self.gamma_min}, {self.gamma_max}]")
        if np.any(self.rates < self.gamma_min) or np.any(self.rates > self.gamma_max):
            raise ValueError("fluctuator rates must lie inside [gamma_min, gamma_max]")
        if np.any(~np.isfinite(self.amplitudes)):
            raise ValueError("fluctuator amplitudes must be finite real numbers")

    @classmethod
    def log_uniform(
        cls,
        b: float,
        gamma_min: float,
        gamma_max: float,
        n: int = DEFAULT_FLUCTUATORS,
        spacing: Literal["grid", "random"] = "grid",
        seed: Optional[int] = None,
    ) -> "FluctuatorEnsemble":
        """
        Rates log-uniform over [γ_min, γ_max]: evenly spaced in log γ
        (spacing="grid") or drawn from the log-uniform law with `seed`.
        """
        if n < 1:
            raise ValueError("at least one fluctuator is required")
        if not 0 < gamma_min < gamma_max:
            raise ValueError(f"need 0 < gamma_min < gamma_max, got [{gamma_min}, {gamma_max}]")
        if spacing == "grid":
            rates = np.geomspace(gamma_min, gamma_max, n)
        else:
            rng = make_rng(seed)
            rates = np.exp(rng.uniform(np.log(gamma_min), np.log(gamma_max), n))
        return cls(np.full(n, float(b)), rates, float(gamma_min), float(gamma_max), seed)

    @classmethod
    def single(cls, b: float, gamma: float) -> "FluctuatorEnsemble":
        return cls(np.array([float(b)]), np.array([float(gamma)]), float(gamma), float(gamma))

    def __len__(self) -> int:
        return len(self.rates)

    @property
    def silent(self) -> bool:
        return bool(np.all(self.amplitudes == 0.0))


@dataclass(frozen=True)
class TelegraphPath:
    """Sum of telegraph processes on [0, t_f], piecewise constant."""

    t_f: float
    amplitudes: np.ndarray
    initial_signs: np.ndarray
    switch_times: List[np.ndarray] = field(repr=False)

    def _signs(self, times: np.ndarray) -> np.ndarray:
        flips = np.stack([np.searchsorted(sw, times, side="right") for sw in self.switch_times])
        return self.initial_signs[:, np.newaxis] * np.where(flips % 2 == 0, 1.0, -1.0)

    def fluctuator_values(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return self.amplitudes[:, np.newaxis] * self._signs(times)

    def sample(self, times) -> np.ndarray:
        return np.sum(self.fluctuator_values(times), axis=0)

    def __call__(self, t: float) -> float:
        return float(self.sample([t])[0])

    @property
    def breakpoints(self) -> np.ndarray:
        """Sorted switch times inside (0, t_f)."""
        if not self.switch_times:
            return np.empty(0)
        return np.unique(np.concatenate(self.switch_times))

    def segments(self):
        """(start, end, value) for every constant piece."""
        edges = np.concatenate([[0.0], self.breakpoints, [self.t_f]])
        values = self.sample(edges[:-1])
        return list(zip(edges[:-1], edges[1:], values))


def _switch_times(rng: np.random.Generator, rate: float, t_f: float) -> np.ndarray:
    mean = rate * t_f
    chunk = int(mean + 5.0 * np.sqrt(mean) + 10)
    times = np.cumsum(rng.exponential(1.0 / rate, chunk))
    while times[-1] < t_f:
        more = times[-1] + np.cumsum(rng.exponential(1.0 / rate, chunk))
        times = np.concatenate([times, more])
    return times[times < t_f]


def sample_fluctuator_path(ens: FluctuatorEnsemble, t_f: float, seed: SeedLike = None) -> TelegraphPath:
    """
    Event-driven sampling: independent ±1 initial signs, then exponential
    waiting times with rate γᵢ for every fluctuator.
    """
    if not t_f > 0:
        raise ValueError("t_f must be positive")
    rng = make_rng(ens.seed if seed is None else seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=len(ens))
    switches = [_switch_times(rng, float(rate), t_f) for rate in ens.rates]
    return TelegraphPath(float(t_f), np.asarray(ens.amplitudes, dtype=float), signs, switches)
