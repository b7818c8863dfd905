"""Non-interacting spin systems in a magnetic field.

Energy of a configuration sigma in {-1, +1}^n is -mu sum_j h_j sigma_j.
Everything factorizes over sites, so the partition function and the
mean energy have closed forms that the exact 2^n enumeration must
reproduce.  Configuration c in [0, 2^n) has spin +1 at site j iff bit
j of c is set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import state_space as ss
from .divergence_zoo import kl
from .errors import DomainError, TooLarge
from .state_space import State

__all__ = [
    "SpinSystem",
    "ThermalParams",
    "BOLTZMANN_SI",
    "hamiltonian",
    "configuration_energies",
    "partition_function",
    "log_partition_function",
    "gibbs_state",
    "internal_energy",
    "entropy_identity_residual",
    "exergy",
    "exergy_kl_residual",
    "MAX_SITES",
    "MAX_SITES_DISTRIBUTION",
]

BOLTZMANN_SI = 1.380649e-23  # J/K
MAX_SITES = 20
MAX_SITES_DISTRIBUTION = 14


@dataclass(frozen=True)
class SpinSystem:
    """Magnetic moment and one external field strength per site."""

    mu: float
    fields: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(float(h) for h in self.fields))
        if self.n < 1:
            raise DomainError("need at least one site")
        if self.n > MAX_SITES:
            raise TooLarge(f"enumeration guarded at {MAX_SITES} sites")

    @property
    def n(self) -> int:
        return len(self.fields)


@dataclass(frozen=True)
class ThermalParams:
    """System and environment inverse temperatures (1/energy units) and
    the Boltzmann constant used to report temperatures.

    beta = 1/(k T), so k T0 = 1/beta0 regardless of the unit system;
    the choice of k only rescales reported temperatures.
    """

    beta: float
    beta0: float
    k: float = 1.0

    def __post_init__(self):
        if self.beta < 0.0 or self.beta0 <= 0.0:
            raise DomainError("inverse temperatures must be positive (beta may be 0)")
        if self.k <= 0.0:
            raise DomainError("Boltzmann constant must be positive")

    @classmethod
    def from_temperatures(cls, T: float, T0: float, k: float = 1.0) -> "ThermalParams":
        return cls(beta=1.0 / (k * T), beta0=1.0 / (k * T0), k=k)

    def temperature(self, beta: float) -> float:
        return math.inf if beta == 0.0 else 1.0 / (self.k * beta)


def _check_beta(beta: float):
    if beta < 0.0:
        raise DomainError("negative inverse temperature is out of scope")


def hamiltonian(sys: SpinSystem, sigma) -> float:
    """Energy -mu sum_j h_j sigma_j of one configuration of +-1 spins."""
    s = np.asarray(sigma, dtype=float)
    if s.shape != (sys.n,) or np.any(np.abs(s) != 1.0):
        raise DomainError("configuration must be +-1 per site")
    return float(-sys.mu * np.dot(sys.fields, s))


def configuration_energies(sys: SpinSystem) -> np.ndarray:
    """Energies of all 2^n configurations in bit order."""
    if sys.n > MAX_SITES_DISTRIBUTION:
        raise TooLarge(f"full enumeration guarded at {MAX_SITES_DISTRIBUTION} sites")
    c = np.arange(2 ** sys.n)
    spins = np.where((c[:, None] >> np.arange(sys.n)[None, :]) & 1, 1.0, -1.0)
    return -sys.mu * spins @ np.asarray(sys.fields)


def log_partition_function(sys: SpinSystem, beta: float) -> float:
    """ln Z via the per-site factorization ln 2 cosh(beta mu h_j)."""
    _check_beta(beta)
    x = beta * sys.mu * np.asarray(sys.fields)
    return float(np.sum(np.logaddexp(x, -x)))


def partition_function(sys: SpinSystem, beta: float) -> float:
    return math.exp(log_partition_function(sys, beta))


def gibbs_state(sys: SpinSystem, beta: float) -> State:
    """Equilibrium distribution exp(-beta E)/Z over the 2^n
    configurations, computed in log space."""
    _check_beta(beta)
    logits = -beta * configuration_energies(sys)
    logits -= logits.max()
    w = np.exp(logits)
    return ss.classical_state(w / w.sum())


def internal_energy(sys: SpinSystem, beta: float) -> float:
    """Mean energy -sum_j mu h_j tanh(beta mu h_j); equals the negative
    beta-derivative of ln Z."""
    _check_beta(beta)
    x = beta * sys.mu * np.asarray(sys.fields)
    return float(-np.sum(sys.mu * np.asarray(sys.fields) * np.tanh(x)))


def entropy_identity_residual(sys: SpinSystem, beta: float) -> float:
    """|H(P_beta) - (beta U + ln Z)|, which vanishes identically."""
    h = ss.entropy(gibbs_state(sys, beta))
    return abs(h - (beta * internal_energy(sys, beta) + log_partition_function(sys, beta)))


def exergy(sys: SpinSystem, params: ThermalParams) -> float:
    """Extractable work against an environment at inverse temperature
    beta0:  kT0 ((beta0 - beta) U + ln Z(beta0)/Z(beta)), with
    kT0 = 1/beta0.  Non-negative; zero iff the system is already in
    equilibrium with the environment (for non-degenerate fields)."""
    u = internal_energy(sys, params.beta)
    kt0 = 1.0 / params.beta0
    return kt0 * (
        (params.beta0 - params.beta) * u
        + log_partition_function(sys, params.beta0)
        - log_partition_function(sys, params.beta)
    )


def exergy_kl_residual(sys: SpinSystem, params: ThermalParams) -> float:
    """Gap between the thermodynamic exergy and kT0 times the
    information divergence from the state to its environmental
    equilibrium.  The two are equal, so this measures roundoff only."""
    ex = exergy(sys, params)
    d = kl(gibbs_state(sys, params.beta), gibbs_state(sys, params.beta0))
    return abs(ex - d / params.beta0)
