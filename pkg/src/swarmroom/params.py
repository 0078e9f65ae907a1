"""Parameter types, priors and the baseline simulation configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

PARAM_NAMES = ("w", "r", "v", "eta")


@dataclass(frozen=True)
class GlobalParams:
    """The four estimated parameters, shared by every agent of a simulation.

    Attributes
    ----------
    w : float
        Modulation weight between external (beacon) and internal (Vicsek)
        influence, in [0, 1]. ``w=1`` is pure beacon seeking.
    r : float
        Neighbour sensing radius in metres.
    v : float
        Movement speed in m/s, in (0, 1).
    eta : float
        Variance of the Gaussian heading noise of the internal influence (rad^2).
    """

    w: float
    r: float
    v: float
    eta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.r, self.v, self.eta], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "GlobalParams":
        w, r, v, eta = (float(x) for x in values)
        return cls(w=w, r=r, v=v, eta=eta)


@dataclass(frozen=True)
class FixedParams:
    """Nuisance constants that are not estimated."""

    kappa: float = 0.01  # half-width of the uniform external heading noise
    sigma: float = 0.05  # positional diffusion coefficient, m/sqrt(s)

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 0.01:
            raise ValueError(f"kappa must lie in [0, 0.01], got {self.kappa}")
        if not self.sigma >= 0.0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class SimConfig:
    num_agents: int = 49
    num_beacons: int = 8
    num_steps: int = 600
    dt: float = 0.1
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.num_agents < 1:
            problems.append("A (num_agents) must be >= 1")
        if self.num_beacons < 1:
            problems.append("B (num_beacons) must be >= 1")
        if self.num_steps < 1:
            problems.append("T (num_steps) must be >= 1")
        if not self.dt > 0:
            problems.append("dt must be > 0")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be an unsigned 64-bit integer")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class PriorSpec:
    """Independent univariate priors for (w, r, v, eta).

    ``w``, ``v`` and ``eta`` are Beta(a, b); ``r`` is LogNormal(mu, s) with
    ``mu``/``s`` the mean and standard deviation of ``log r``.
    """

    w: tuple[float, float] = (2.0, 2.0)
    r: tuple[float, float] = (0.0, 0.5)
    v: tuple[float, float] = (2.0, 2.0)
    eta: tuple[float, float] = (2.0, 5.0)

    def __post_init__(self):
        for name in ("w", "v", "eta"):
            a, b = getattr(self, name)
            if not (a > 0 and b > 0):
                raise ValueError(f"Beta shape parameters for {name} must be > 0")
        if not self.r[1] > 0:
            raise ValueError("LogNormal scale for r must be > 0")

    def marginal(self, name: str):
        """Frozen scipy distribution of one marginal."""
        if name == "r":
            mu, s = self.r
            return stats.lognorm(s=s, scale=math.exp(mu))
        a, b = getattr(self, name)
        return stats.beta(a, b)

    def variances(self) -> np.ndarray:
        return np.array([self.marginal(n).var() for n in PARAM_NAMES])

    def means(self) -> np.ndarray:
        return np.array([self.marginal(n).mean() for n in PARAM_NAMES])

    def support(self, name: str) -> tuple[float, float]:
        return (0.0, math.inf) if name == "r" else (0.0, 1.0)


DEFAULT_PRIOR = PriorSpec()


def sample_prior(prior: PriorSpec, rng: np.random.Generator) -> GlobalParams:
    """Draw one parameter vector; marginals are drawn in the order w, r, v, eta."""
    w = rng.beta(*prior.w)
    r = rng.lognormal(prior.r[0], prior.r[1])
    v = rng.beta(*prior.v)
    eta = rng.beta(*prior.eta)
    return GlobalParams(float(w), float(r), float(v), float(eta))


def sample_prior_array(prior: PriorSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """Vectorised prior draws, shape ``(n, 4)`` in PARAM_NAMES order."""
    out = np.empty((n, 4))
    out[:, 0] = rng.beta(*prior.w, size=n)
    out[:, 1] = rng.lognormal(prior.r[0], prior.r[1], size=n)
    out[:, 2] = rng.beta(*prior.v, size=n)
    out[:, 3] = rng.beta(*prior.eta, size=n)
    return out


def prior_log_density(prior: PriorSpec, params) -> float:
    """Joint log prior density; ``-inf`` outside the support.

    ``params`` may be a GlobalParams or a length-4 array.
    """
    values = params.as_array() if isinstance(params, GlobalParams) else np.asarray(params, float)
    return float(prior_log_density_array(prior, values[None, :])[0])


def prior_log_density_array(prior: PriorSpec, values: np.ndarray) -> np.ndarray:
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    total = np.zeros(values.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        for k, name in enumerate(PARAM_NAMES):
            lp = prior.marginal(name).logpdf(values[:, k])
            total += np.where(np.isnan(lp), -np.inf, lp)
    return total


def validate_params(params: GlobalParams) -> list[str]:
    """Return the violated invariants (empty list when valid)."""
    problems = []
    if not 0.0 <= params.w <= 1.0:
        problems.append(f"w out of range [0, 1]: {params.w}")
    if not params.r > 0.0:
        problems.append(f"r not positive: {params.r}")
    if not 0.0 < params.v < 1.0:
        problems.append(f"v out of range (0, 1): {params.v}")
    if not 0.0 < params.eta < 1.0:
        problems.append(f"eta out of range (0, 1): {params.eta}")
    return problems
