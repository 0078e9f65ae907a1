"""Likelihood-free posterior estimation: ABC rejection on a reference table
and adaptive ABC-SMC."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import rng as _rng
from .batch import parallel_map
from .params import PARAM_NAMES, PriorSpec, prior_log_density_array, sample_prior_array
from .scenario import Scenario
from .summaries import NUM_SUMMARIES, Standardizer, SummaryVector


class RowError(RuntimeError):
    """A simulation in a batch failed; carries the row index."""

    def __init__(self, index, message):
        super().__init__(f"row {index}: {message}")
        self.index = index


class DegenerateGeneration(RuntimeError):
    def __init__(self, generation, message):
        super().__init__(f"degenerate generation {generation}: {message}")
        self.generation = generation


def _param_index(name: str) -> int:
    try:
        return PARAM_NAMES.index(name)
    except ValueError:
        raise KeyError(f"unknown parameter {name!r}; expected one of {PARAM_NAMES}") from None


@dataclass
class PosteriorSamples:
    """Weighted parameter draws; rows follow PARAM_NAMES order."""

    draws: np.ndarray  # (M, 4)
    weights: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.draws = np.atleast_2d(np.asarray(self.draws, dtype=np.float64))
        m = self.draws.shape[0]
        if m == 0:
            raise ValueError("empty posterior")
        if self.weights is None:
            self.weights = np.full(m, 1.0 / m)
        else:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (m,) or np.any(w < 0) or not np.isfinite(w).all():
                raise ValueError("weights must be finite, non-negative, one per draw")
            self.weights = w / w.sum()

    def __len__(self):
        return self.draws.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.draws[:, _param_index(name)]

    def mean(self) -> np.ndarray:
        return self.weights @ self.draws

    def var(self) -> np.ndarray:
        return self.weights @ (self.draws - self.mean()) ** 2

    def quantile(self, name: str, beta: float) -> float:
        return posterior_quantile(self, name, beta)

    def median(self, name: str) -> float:
        return posterior_quantile(self, name, 0.5)

    def ess(self) -> float:
        return float(1.0 / np.sum(self.weights ** 2))


def posterior_quantile(samples: PosteriorSamples, param: str, beta: float) -> float:
    """Weighted inverse-CDF quantile: the smallest draw whose cumulative
    weight reaches ``beta``."""
    x = samples.column(param)
    order = np.argsort(x, kind="stable")
    cum = np.cumsum(samples.weights[order])
    k = int(np.searchsorted(cum, beta - 1e-12, side="left"))
    return float(x[order[min(k, len(x) - 1)]])


@dataclass(eq=False)
class ReferenceTable:
    params: np.ndarray  # (N, 4)
    summaries: np.ndarray  # (N, K)
    seeds: np.ndarray  # (N,) uint64
    scenario: Scenario
    prior: PriorSpec = field(default_factory=PriorSpec)
    base_seed: int = 0

    def __post_init__(self):
        n = self.params.shape[0]
        if self.summaries.shape != (n, NUM_SUMMARIES) or self.seeds.shape != (n,):
            raise ValueError("reference table blocks have inconsistent shapes")

    def __len__(self):
        return self.params.shape[0]

    @functools.cached_property
    def standardizer(self) -> Standardizer:
        return Standardizer.fit(self.summaries)

    def equals(self, other: "ReferenceTable") -> bool:
        return (
            np.array_equal(self.params, other.params)
            and np.array_equal(self.summaries, other.summaries)
            and np.array_equal(self.seeds, other.seeds)
            and self.scenario == other.scenario
            and self.prior == other.prior
            and self.base_seed == other.base_seed
        )


def table_row_seeds(base_seed: int, n: int) -> np.ndarray:
    return np.array([_rng.derive_seed(base_seed, _rng.TABLE, i) for i in range(n)], dtype=np.uint64)


def _prior_row(prior: PriorSpec, seed: int) -> np.ndarray:
    return sample_prior_array(prior, _rng.make_rng(_rng.derive_seed(seed, _rng.PRIOR)), 1)[0]


def _simulate_row(scenario: Scenario, task):
    index, params, seed = task
    try:
        return scenario.summary(params, seed)
    except Exception as exc:  # noqa: BLE001 - re-raised with the row index
        raise RowError(index, f"{type(exc).__name__}: {exc}") from exc


def simulate_summaries(scenario: Scenario, params: np.ndarray, seeds, workers=None, progress=None) -> np.ndarray:
    tasks = [(i, params[i], int(s)) for i, s in enumerate(seeds)]
    rows = parallel_map(functools.partial(_simulate_row, scenario), tasks, workers, progress)
    return np.array(rows, dtype=np.float64).reshape(len(tasks), NUM_SUMMARIES)


def build_reference_table(
    prior: PriorSpec,
    scenario: Scenario,
    n: int,
    base_seed: int,
    workers: int | None = None,
    progress: str | None = None,
) -> ReferenceTable:
    """Simulate ``n`` prior-predictive rows.

    Row ``i`` uses seed ``derive_seed(base_seed, TABLE, i)`` for its
    simulation; its parameters come from a child stream of that seed.
    """
    if n < 1:
        raise ValueError("reference table needs at least one row")
    seeds = table_row_seeds(base_seed, n)
    params = np.array([_prior_row(prior, int(s)) for s in seeds])
    summaries = simulate_summaries(scenario, params, seeds, workers, progress)
    return ReferenceTable(params, summaries, seeds, scenario, prior, int(base_seed))


def distance(a, b) -> float:
    """Euclidean distance between two standardized summary vectors."""
    a = a.values if isinstance(a, SummaryVector) else np.asarray(a, dtype=np.float64)
    b = b.values if isinstance(b, SummaryVector) else np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"summary length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def _distances(observed, summaries, tf: Standardizer) -> np.ndarray:
    obs = tf(observed)
    diff = tf(summaries) - obs
    return np.sqrt(np.sum(diff * diff, axis=1))


def accept_count(accept_fraction: float, n: int) -> int:
    if not 0 < accept_fraction <= 1:
        raise ValueError("accept_fraction must lie in (0, 1]")
    # round first so that e.g. (1/N) * N does not ceil to 2
    return min(n, max(1, math.ceil(round(accept_fraction * n, 9))))


def abc_rejection(observed, table: ReferenceTable, accept_fraction: float) -> PosteriorSamples:
    """Keep the ``ceil(accept_fraction * N)`` rows closest to ``observed``.

    Summaries are standardized with the table's median/MAD transform; ties
    at the cutoff go to the lower row index.
    """
    if len(table) == 0:
        raise ValueError("empty reference table")
    k = accept_count(accept_fraction, len(table))
    d = _distances(observed, table.summaries, table.standardizer)
    keep = np.argsort(d, kind="stable")[:k]
    return PosteriorSamples(
        table.params[keep].copy(),
        info={"distances": d[keep], "rows": keep, "tolerance": float(d[keep].max())},
    )


@dataclass(frozen=True)
class SMCSchedule:
    population: int = 500
    generations: int = 4
    quantile: float = 0.5
    # simulation budget per generation, in multiples of the population size
    max_sims_factor: int = 200

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population size must be >= 2")
        if self.generations < 1:
            raise ValueError("need at least one generation")
        if not 0 < self.quantile < 1:
            raise ValueError("quantile must lie in (0, 1)")


def _log_kernel_mixture(theta, particles, log_w, scale) -> np.ndarray:
    """log sum_j W_j prod_p N(theta_ip; particle_jp, scale_p) for each row i."""
    z = (theta[:, None, :] - particles[None, :, :]) / scale
    log_k = -0.5 * np.sum(z * z, axis=2) - np.sum(np.log(scale)) - 0.5 * theta.shape[1] * math.log(2 * math.pi)
    return logsumexp(log_k + log_w[None, :], axis=1)


def _propose(rng, particles, weights, scale, prior, count, generation, max_rounds=1000):
    out = np.empty((0, particles.shape[1]))
    for _ in range(max_rounds):
        need = count - out.shape[0]
        if need == 0:
            return out
        idx = rng.choice(particles.shape[0], size=need, p=weights)
        cand = particles[idx] + scale * rng.standard_normal((need, particles.shape[1]))
        ok = np.isfinite(prior_log_density_array(prior, cand))
        out = np.concatenate([out, cand[ok]])
    raise DegenerateGeneration(generation, "perturbation kernel keeps leaving the prior support")


def abc_smc(
    observed,
    prior: PriorSpec,
    scenario: Scenario,
    schedule: SMCSchedule,
    base_seed: int,
    table: ReferenceTable | None = None,
    workers: int | None = None,
) -> PosteriorSamples:
    """Population Monte Carlo ABC with adaptive tolerances.

    Generation 0 is ABC rejection keeping ``population`` rows: from ``table``
    when one is given, otherwise from a fresh table of
    ``ceil(population / quantile)`` rows with base seed
    ``derive_seed(base_seed, SMC, 0)``. Each later generation resamples the
    weighted population, perturbs every parameter with a Gaussian of
    standard deviation sqrt(2) times its weighted std, discards proposals
    outside the prior support, and accepts simulations within the
    ``quantile``-quantile of the previous generation's accepted distances.
    Importance weights are prior density over the kernel mixture density.

    ``info`` of the result holds the tolerance sequence, simulation counts
    and final accepted distances.
    """
    M = schedule.population
    if table is None:
        n0 = math.ceil(round(M / schedule.quantile, 9))
        table = build_reference_table(prior, scenario, n0, _rng.derive_seed(base_seed, _rng.SMC, 0), workers)
        n_sims = [n0]
    else:
        n_sims = [0]
    if M > len(table):
        raise ValueError(f"population {M} exceeds reference table size {len(table)}")
    tf = table.standardizer
    gen0 = abc_rejection(observed, table, M / len(table))
    particles = gen0.draws
    weights = gen0.weights
    dists = gen0.info["distances"]
    tolerances = [float(dists.max())]

    for g in range(1, schedule.generations):
        eps = float(np.quantile(dists, schedule.quantile))
        rng = _rng.make_rng(_rng.derive_seed(base_seed, _rng.SMC, g))
        std = np.sqrt(weights @ (particles - weights @ particles) ** 2)
        scale = np.maximum(math.sqrt(2.0) * std, 1e-9)

        acc_theta, acc_dist = [], []
        used = 0
        while len(acc_theta) < M:
            if used >= schedule.max_sims_factor * M:
                raise DegenerateGeneration(g, f"only {len(acc_theta)} of {M} accepted after {used} simulations")
            batch = _propose(rng, particles, weights, scale, prior, M, g)
            seeds = [_rng.derive_seed(base_seed, _rng.SMC, g, used + i) for i in range(M)]
            sims = simulate_summaries(scenario, batch, seeds, workers)
            d = _distances(observed, sims, tf)
            used += M
            for i in np.flatnonzero(d <= eps):
                if len(acc_theta) == M:
                    break
                acc_theta.append(batch[i])
                acc_dist.append(d[i])
        theta = np.array(acc_theta)
        log_w = prior_log_density_array(prior, theta) - _log_kernel_mixture(
            theta, particles, np.log(weights), scale
        )
        if not np.isfinite(log_w).all():
            raise DegenerateGeneration(g, "non-finite importance weights")
        w = np.exp(log_w - log_w.max())
        particles, weights, dists = theta, w / w.sum(), np.array(acc_dist)
        tolerances.append(eps)
        n_sims.append(used)

    return PosteriorSamples(
        particles,
        weights,
        info={"tolerances": tolerances, "simulations": n_sims, "distances": dists},
    )
