"""Calibration and recovery metrics, and the end-to-end recovery study."""

from __future__ import annotations

import functools
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import rng as _rng
from .batch import parallel_map
from .inference import (
    PosteriorSamples,
    ReferenceTable,
    SMCSchedule,
    abc_rejection,
    abc_smc,
    posterior_quantile,
)
from .params import PARAM_NAMES, PriorSpec, sample_prior_array
from .scenario import Scenario

DEFAULT_ALPHAS = np.linspace(0.05, 0.995, 20)


def empirical_coverage(truths, posteriors, param: str, alpha: float) -> float:
    """Fraction of cases whose truth lies in the closed central ``alpha``
    credible interval of its posterior."""
    return float(np.mean(_covered(truths, posteriors, param, alpha)))


def _covered(truths, posteriors, param, alpha) -> np.ndarray:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    beta = (1 - alpha) / 2
    hits = []
    for truth, post in zip(truths, posteriors, strict=True):
        lo = posterior_quantile(post, param, beta)
        hi = posterior_quantile(post, param, 1 - beta)
        hits.append(lo <= truth <= hi)
    return np.array(hits)


def coverage_curve(truths, posteriors, param, alphas=DEFAULT_ALPHAS) -> np.ndarray:
    return np.array([empirical_coverage(truths, posteriors, param, a) for a in alphas])


def ece_from_coverage(coverage, alphas) -> float:
    coverage = np.asarray(coverage, dtype=np.float64)
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.size < 1:
        raise ValueError("need at least one credibility level")
    return float(np.mean(np.abs(coverage - alphas)))


def ece(truths, posteriors, param, alphas=DEFAULT_ALPHAS) -> float:
    """Mean absolute gap between empirical and nominal coverage."""
    return ece_from_coverage(coverage_curve(truths, posteriors, param, alphas), alphas)


def clopper_pearson(k, n, level=0.95) -> tuple[np.ndarray, np.ndarray]:
    """Exact binomial confidence interval for ``k`` successes in ``n`` trials."""
    k = np.asarray(k, dtype=np.float64)
    a = (1 - level) / 2
    with np.errstate(invalid="ignore"):
        lo = np.where(k > 0, stats.beta.ppf(a, k, n - k + 1), 0.0)
        hi = np.where(k < n, stats.beta.ppf(1 - a, k + 1, n - k), 1.0)
    return lo, hi


def posterior_contraction(posterior: PosteriorSamples, prior_variance: float, param: str):
    """``1 - Var_post / Var_prior``.

    Returns ``(pc, degenerate)``; a single-draw posterior gives ``(1.0, True)``.
    """
    if not prior_variance > 0:
        raise ValueError("prior variance must be > 0")
    if len(posterior) < 2:
        return 1.0, True
    x = posterior.column(param)
    m = posterior.weights @ x
    var = posterior.weights @ (x - m) ** 2
    return float(1.0 - var / prior_variance), False


def nrmse(truths, posteriors, param: str, support: tuple[float, float]) -> float:
    lo, hi = support
    if not hi > lo:
        raise ValueError("normalisation range must satisfy max > min")
    sq = [post.weights @ (post.column(param) - t) ** 2 for t, post in zip(truths, posteriors, strict=True)]
    return float(np.sqrt(np.mean(sq)) / (hi - lo))


def nrmse_range(param: str, prior: PriorSpec, truths) -> tuple[float, float]:
    """Prior support when bounded, else the observed range of the truths."""
    lo, hi = prior.support(param)
    if np.isfinite(lo) and np.isfinite(hi):
        return lo, hi
    t = np.asarray(truths, dtype=np.float64)
    return float(t.min()), float(t.max())


def recovery_correlation(truths, medians) -> float:
    """Pearson correlation between true values and posterior medians."""
    t = np.asarray(truths, dtype=np.float64)
    m = np.asarray(medians, dtype=np.float64)
    if t.size < 2 or t.shape != m.shape:
        raise ValueError("need two equally long vectors with at least two entries")
    if np.ptp(t) == 0 or np.ptp(m) == 0:
        raise ValueError("correlation undefined for a constant input")
    return float(np.corrcoef(t, m)[0, 1])


@dataclass
class ParameterReport:
    name: str
    ece: float
    nrmse: float
    nrmse_range: tuple[float, float]
    contraction: float
    degenerate_posteriors: int
    correlation: float | None
    coverage: list[float]
    coverage_lower: list[float]
    coverage_upper: list[float]
    truths: list[float]
    medians: list[float]
    ci95_lower: list[float]
    ci95_upper: list[float]


@dataclass
class RecoveryReport:
    method: str
    num_cases: int
    alphas: list[float]
    parameters: dict[str, ParameterReport]
    settings: dict = field(default_factory=dict)

    @property
    def num_levels(self) -> int:
        return len(self.alphas)

    def metric(self, name: str) -> dict[str, float]:
        return {p: getattr(r, name) for p, r in self.parameters.items()}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["num_levels"] = self.num_levels
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def coverage_table(self, param: str) -> list[tuple[float, float, float, float]]:
        r = self.parameters[param]
        return list(zip(self.alphas, r.coverage, r.coverage_lower, r.coverage_upper))


def build_report(truths, posteriors, prior: PriorSpec, method: str, alphas=DEFAULT_ALPHAS, settings=None) -> RecoveryReport:
    """Compute every metric for every parameter from (truth, posterior) pairs.

    ``truths`` has shape ``(S, 4)`` in PARAM_NAMES order.
    """
    truths = np.asarray(truths, dtype=np.float64)
    S = truths.shape[0]
    alphas = np.asarray(alphas, dtype=np.float64)
    prior_var = prior.variances()
    reports = {}
    for k, name in enumerate(PARAM_NAMES):
        t = truths[:, k]
        hits = np.array([_covered(t, posteriors, name, a) for a in alphas])
        cov = hits.mean(axis=1)
        band_lo, band_hi = clopper_pearson(hits.sum(axis=1), S, 0.95)
        pcs = [posterior_contraction(p, prior_var[k], name) for p in posteriors]
        medians = np.array([posterior_quantile(p, name, 0.5) for p in posteriors])
        try:
            corr = recovery_correlation(t, medians)
        except ValueError:
            corr = None
        rng_ = nrmse_range(name, prior, t)
        reports[name] = ParameterReport(
            name=name,
            ece=ece_from_coverage(cov, alphas),
            nrmse=nrmse(t, posteriors, name, rng_) if rng_[1] > rng_[0] else float("nan"),
            nrmse_range=rng_,
            contraction=float(np.mean([pc for pc, _ in pcs])),
            degenerate_posteriors=int(sum(flag for _, flag in pcs)),
            correlation=corr,
            coverage=cov.tolist(),
            coverage_lower=band_lo.tolist(),
            coverage_upper=band_hi.tolist(),
            truths=t.tolist(),
            medians=medians.tolist(),
            ci95_lower=[posterior_quantile(p, name, 0.025) for p in posteriors],
            ci95_upper=[posterior_quantile(p, name, 0.975) for p in posteriors],
        )
    return RecoveryReport(method, S, alphas.tolist(), reports, dict(settings or {}))


def case_seed(base_seed: int, index: int) -> int:
    return _rng.derive_seed(base_seed, _rng.RECOVERY, index)


def draw_case(prior: PriorSpec, scenario: Scenario | None, seed: int, simulate: bool = True):
    """Ground-truth parameters and (optionally) the observed summary for one case."""
    truth = sample_prior_array(prior, _rng.make_rng(_rng.derive_seed(seed, _rng.PRIOR)), 1)[0]
    obs = scenario.summary(truth, seed) if simulate else None
    return truth, obs


def _checkpointed(directory, fn, seed):
    path = os.path.join(directory, f"case_{seed}.npz")
    if os.path.exists(path):
        with np.load(path) as data:
            post = PosteriorSamples(data["draws"])
            post.weights = data["weights"]
            post.info = {"simulations": data["simulations"].tolist(), "tolerances": data["tolerances"].tolist()}
            return data["truth"], post
    truth, post = fn(seed)
    tmp = f"{path}.tmp.npz"
    np.savez(
        tmp, truth=truth, draws=post.draws, weights=post.weights,
        simulations=np.asarray(post.info.get("simulations", []), dtype=np.int64),
        tolerances=np.asarray(post.info.get("tolerances", []), dtype=np.float64),
    )
    os.replace(tmp, path)
    return truth, post


def _run_case(prior, scenario, table, method, schedule, accept_fraction, null_draws, seed):
    truth, obs = draw_case(prior, scenario, seed, simulate=method != "prior")
    if method == "prior":
        draws = sample_prior_array(prior, _rng.make_rng(_rng.derive_seed(seed, _rng.NULL)), null_draws)
        return truth, PosteriorSamples(draws)
    if method == "rejection":
        return truth, abc_rejection(obs, table, accept_fraction)
    if method == "smc":
        post = abc_smc(obs, prior, scenario, schedule, _rng.derive_seed(seed, _rng.INFER), table=table, workers=1)
        return truth, post
    raise ValueError(f"unknown inference method {method!r}")


def run_recovery_study(
    prior: PriorSpec,
    scenario: Scenario,
    table: ReferenceTable | None,
    num_cases: int,
    base_seed: int,
    method: str = "smc",
    schedule: SMCSchedule | None = None,
    accept_fraction: float = 0.05,
    null_draws: int = 1000,
    alphas=DEFAULT_ALPHAS,
    workers: int | None = None,
    progress: str | None = None,
    checkpoint_dir: str | os.PathLike | None = None,
) -> tuple[RecoveryReport, list[PosteriorSamples]]:
    """Draw fresh (truth, observation) cases and score the chosen estimator.

    ``method`` is ``"smc"`` (generation 0 from ``table``), ``"rejection"``
    (on ``table``) or ``"prior"`` (the null estimator: posterior := prior
    draws, useful to check the metrics themselves). Case ``s`` uses seed
    ``derive_seed(base_seed, RECOVERY, s)``, a stream separate from the
    table rows.

    With ``checkpoint_dir`` each finished case is stored as
    ``case_<seed>.npz`` and reloaded on the next call, so an interrupted
    study resumes where it stopped. The files are keyed by case seed only;
    use one directory per configuration.
    """
    if num_cases < 2:
        raise ValueError("a recovery study needs at least two cases")
    if method != "prior" and table is None:
        raise ValueError(f"method {method!r} needs a reference table")
    schedule = schedule or SMCSchedule()
    fn = functools.partial(_run_case, prior, scenario, table, method, schedule, accept_fraction, null_draws)
    if checkpoint_dir is not None:
        os.makedirs(checkpoint_dir, exist_ok=True)
        fn = functools.partial(_checkpointed, os.fspath(checkpoint_dir), fn)
    seeds = [case_seed(base_seed, s) for s in range(num_cases)]
    results = parallel_map(fn, seeds, workers, progress)
    truths = np.array([t for t, _ in results])
    posteriors = [p for _, p in results]
    settings = {
        "base_seed": int(base_seed),
        "table_rows": None if table is None else len(table),
        "table_base_seed": None if table is None else table.base_seed,
    }
    if method == "smc":
        settings["schedule"] = asdict(schedule)
    elif method == "rejection":
        settings["accept_fraction"] = accept_fraction
    else:
        settings["null_draws"] = null_draws
    return build_report(truths, posteriors, prior, method, alphas, settings), posteriors
