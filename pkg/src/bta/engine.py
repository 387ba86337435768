"""Sweep scheduling, multi-chain runs and posterior summaries."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .families import XI_MIN, pinball
from .kernels import rj_pair_move, update_outcome_parameters
from .latent import cbf_model_step, gibbs_beta, log_model_prior, update_indices
from .model import ChainState, Dataset, Family, GammaStatus, ModelSpec, gev_support, validate_state

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    iterations: int = 20_000
    burn_in: int = 5_000
    thin: int = 5
    chains: int = 4
    seed: int = 0
    model_moves: int = 1
    index_moves: int = 1
    outcome_moves: int = 1
    rj_moves: int = 1
    # probability of attempting the RJ move of each (r, t) pair in a sweep
    rj_attempt: float = 0.5
    nu_span: float = kernels.NU_SPAN
    # full prior/Jacobian ratio for anchor rebalancing; False = likelihood only
    exact_rebalance: bool = True
    keep_indices: bool = True
    workers: int = 1

    def __post_init__(self):
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")
        if self.thin < 1 or self.chains < 1:
            raise ValueError("thin and chains must be at least 1")
        if not 0.0 < self.rj_attempt <= 1.0:
            raise ValueError("rj_attempt must lie in (0, 1]")

    @property
    def n_records(self) -> int:
        return len(range(self.burn_in, self.iterations, self.thin))


PAPER_SCALE = RunConfig(iterations=400_000, burn_in=100_000, thin=100, chains=30)


# -- initial state -------------------------------------------------------------

def _init_outcome(out, y: np.ndarray) -> tuple[float, float, float]:
    alpha, kappa, xi = 0.0, np.nan, np.nan
    if out.family is Family.LOGISTIC:
        if y.size:
            p = np.clip(y.mean(), 0.02, 0.98)
            alpha = float(np.log(p / (1 - p)))
    elif out.family is Family.QUANTILE:
        kappa = 0.0
        if y.size:
            alpha = float(np.quantile(y, out.tau))
            spread = np.mean(pinball(y - alpha, out.tau))
            kappa = float(np.clip(-np.log(max(spread, 1e-8)), -5, 5))
    else:
        kappa, xi = 0.0, 0.1
        if y.size:
            sigma = max(float(np.std(y)) * np.sqrt(6) / np.pi, 1e-8)
            alpha = float(np.mean(y) - 0.5772 * sigma)
            kappa = -np.log(sigma)
            while np.any(gev_support(y, alpha, kappa, xi) <= 0):
                kappa -= 0.5
    return alpha, kappa, xi


def initial_state(spec: ModelSpec, data: Dataset, active: bool = True) -> ChainState:
    """Deterministic starting point.

    Each theory starts with its full proxy set (or its first proxy when the full
    set has zero prior mass), zero coefficients and index, and, when ``active``,
    loaded on every outcome with the first one as anchor and Free loadings at 0.
    """
    T, R, n = spec.T, spec.R, data.n
    models, beta = [], []
    for t, th in enumerate(spec.theories):
        m = np.ones(th.p, dtype=bool)
        if not np.isfinite(log_model_prior(m, data.correlations[t])):
            m = np.zeros(th.p, dtype=bool)
            m[0] = True
        models.append(m)
        beta.append(np.zeros(th.p))
    status = np.zeros((R, T), dtype=np.int8)
    gamma = np.zeros((R, T))
    if active:
        status[0, :] = GammaStatus.ONE
        gamma[0, :] = 1.0
        status[1:, :] = GammaStatus.FREE
    alpha, kappa, xi = np.zeros(R), np.full(R, np.nan), np.full(R, np.nan)
    for r, out in enumerate(spec.outcomes):
        alpha[r], kappa[r], xi[r] = _init_outcome(out, data.Y[data.present(r), r])
    return ChainState(models, beta, np.zeros((n, T)), status, gamma, alpha, kappa, xi, spec.nu.copy())


# -- one sweep -----------------------------------------------------------------

def sweep(state: ChainState, spec: ModelSpec, data: Dataset, rng: np.random.Generator,
          config: RunConfig = RunConfig(), stats: dict | None = None) -> ChainState:
    """One full pass over every parameter block, in a fixed order:
    per theory the model move, beta and the indices; per outcome the
    intercept, family globals and Free loadings; then one reversible-jump
    attempt per (outcome, theory) pair."""
    for t in range(spec.T):
        for _ in range(config.model_moves):
            changed = cbf_model_step(state, data, t, rng)
            kernels._tally(stats, "model", changed)
        gibbs_beta(state, data, t, rng)
        if state.active(t):
            for _ in range(config.index_moves):
                step = update_indices(state, spec, data, t, rng)
                kernels._tally(stats, "index", step.accepted)
    for _ in range(config.outcome_moves):
        for r in range(spec.R):
            update_outcome_parameters(state, spec, data, r, rng, stats)
    for _ in range(config.rj_moves):
        for t in range(spec.T):
            for r in range(spec.R):
                if rng.random() < config.rj_attempt:
                    res = rj_pair_move(state, spec, data, r, t, rng, config.nu_span, config.exact_rebalance)
                    kernels._tally(stats, res.move, res.accepted)
    return state


# -- sample records ---------------------------------------------------------------

@dataclass
class ChainSamples:
    """Thinned post-burn-in records of one chain plus running index moments.

    ``index`` holds raw ``I`` (``S x n x T``) when kept; the moments are over
    the scale-free ``nu * I`` and are always kept.
    """

    theory_names: tuple[str, ...]
    outcome_names: tuple[str, ...]
    proxy_names: tuple[tuple[str, ...], ...]
    iteration: np.ndarray
    models: list[np.ndarray]
    beta: list[np.ndarray]
    status: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    kappa: np.ndarray
    xi: np.ndarray
    nu: np.ndarray
    index: np.ndarray | None
    index_sum: np.ndarray
    index_pooled_sum: np.ndarray
    index_pooled_cross: np.ndarray
    chain: int = 0
    seed: int = 0
    labels: dict | None = None
    acceptance: dict = field(default_factory=dict)

    @classmethod
    def allocate(cls, spec: ModelSpec, n: int, size: int, keep_indices: bool = True, **meta):
        T, R = spec.T, spec.R
        return cls(
            theory_names=tuple(t.name for t in spec.theories),
            outcome_names=tuple(o.name for o in spec.outcomes),
            proxy_names=tuple(t.proxies for t in spec.theories),
            iteration=np.zeros(size, dtype=np.int64),
            models=[np.zeros((size, th.p), dtype=bool) for th in spec.theories],
            beta=[np.zeros((size, th.p)) for th in spec.theories],
            status=np.zeros((size, R, T), dtype=np.int8),
            gamma=np.zeros((size, R, T)),
            alpha=np.zeros((size, R)),
            kappa=np.zeros((size, R)),
            xi=np.zeros((size, R)),
            nu=np.zeros((size, T)),
            index=np.zeros((size, n, T)) if keep_indices else None,
            index_sum=np.zeros((n, T)),
            index_pooled_sum=np.zeros(T),
            index_pooled_cross=np.zeros((T, T)),
            **meta,
        )

    def __len__(self) -> int:
        return int(self.iteration.size)

    @property
    def n(self) -> int:
        return self.index_sum.shape[0]

    def record(self, k: int, it: int, state: ChainState) -> None:
        self.iteration[k] = it
        for t in range(len(self.models)):
            self.models[t][k] = state.models[t]
            self.beta[t][k] = state.beta[t]
        self.status[k] = state.status
        self.gamma[k] = state.gamma
        self.alpha[k] = state.alpha
        self.kappa[k] = state.kappa
        self.xi[k] = state.xi
        self.nu[k] = state.nu
        if self.index is not None:
            self.index[k] = state.index
        scaled = state.index * state.nu
        self.index_sum += scaled
        self.index_pooled_sum += scaled.sum(axis=0)
        self.index_pooled_cross += scaled.T @ scaled

    def decode(self, k: int) -> ChainState:
        """Rebuild the full state of record ``k`` (needs kept indices)."""
        if self.index is None:
            raise ValueError("indices were not kept for this chain")
        return ChainState(
            models=[m[k].copy() for m in self.models],
            beta=[b[k].copy() for b in self.beta],
            index=self.index[k].copy(),
            status=self.status[k].copy(),
            gamma=self.gamma[k].copy(),
            alpha=self.alpha[k].copy(),
            kappa=self.kappa[k].copy(),
            xi=self.xi[k].copy(),
            nu=self.nu[k].copy(),
        )


def run_chain(spec: ModelSpec, data: Dataset, config: RunConfig, chain: int = 0,
              state: ChainState | None = None) -> ChainSamples:
    """Run one chain on the ``chain``-th substream of ``config.seed``."""
    seq = np.random.SeedSequence(config.seed).spawn(config.chains)[chain]
    rng = np.random.Generator(np.random.PCG64(seq))
    state = initial_state(spec, data) if state is None else state.copy()
    samples = ChainSamples.allocate(spec, data.n, config.n_records, config.keep_indices,
                                    chain=chain, seed=config.seed, labels=data.labels)
    stats: dict = {}
    k = 0
    started = time.perf_counter()
    for it in range(config.iterations):
        sweep(state, spec, data, rng, config, stats)
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            samples.record(k, it, state)
            k += 1
    samples.acceptance = {key: (int(a), int(b)) for key, (a, b) in sorted(stats.items())}
    log.info("chain %d: %d sweeps in %.1fs", chain, config.iterations, time.perf_counter() - started)
    return samples


def _run_chain_job(args):
    return run_chain(*args)


@dataclass
class RunResult:
    chains: list[ChainSamples]
    summary: "PosteriorSummary"


def run_chains(config: RunConfig, spec: ModelSpec, data: Dataset, group: str | None = None) -> RunResult:
    """Run ``config.chains`` chains (in worker processes when ``workers > 1``)
    and summarise the pooled records."""
    if data.n == 0:
        raise ValueError("no observations")
    data.check_against(spec)
    jobs = [(spec, data, config, c) for c in range(config.chains)]
    if config.workers > 1 and config.chains > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chains = list(pool.map(_run_chain_job, jobs))
    else:
        chains = [_run_chain_job(j) for j in jobs]
    return RunResult(chains, summarize(chains, group=group))


# -- summaries -------------------------------------------------------------------

@dataclass
class PosteriorSummary:
    theory_names: tuple[str, ...]
    outcome_names: tuple[str, ...]
    proxy_names: tuple[tuple[str, ...], ...]
    n_samples: int
    inclusion: np.ndarray
    gamma_mean: np.ndarray
    proxy_inclusion: list[np.ndarray]
    proxy_mean: list[np.ndarray]
    index_mean: np.ndarray
    index_corr: np.ndarray
    chain_inclusion: np.ndarray
    labels: dict | None = None
    group_name: str | None = None
    groups: np.ndarray | None = None
    group_means: np.ndarray | None = None

    @property
    def chain_agreement(self) -> float:
        """Largest spread in theory-inclusion probability across chains."""
        ci = self.chain_inclusion
        return float(np.max(ci.max(axis=0) - ci.min(axis=0))) if len(ci) else 0.0

    def index_extremes(self, t: int, k: int = 5) -> tuple[np.ndarray, np.ndarray]:
        """Row indices of the ``k`` lowest and ``k`` highest posterior-mean indices."""
        order = np.argsort(self.index_mean[:, t], kind="stable")
        return order[:k], order[-k:]


def _conditional_mean(values: np.ndarray, included: np.ndarray) -> np.ndarray:
    count = included.sum(axis=0)
    total = np.where(included, values, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(count > 0, total / np.maximum(count, 1), np.nan)


def summarize(chains: list[ChainSamples], group: str | None = None) -> PosteriorSummary:
    """Pool chains into inclusion probabilities, conditional means and index
    statistics.  Conditional means are ``NaN`` for entries never included; a
    One loading counts as 1."""
    if not chains or sum(len(c) for c in chains) == 0:
        raise ValueError("no samples to summarise")
    first = chains[0]
    S = sum(len(c) for c in chains)
    status = np.concatenate([c.status for c in chains])
    gamma = np.concatenate([c.gamma for c in chains])
    included = status != GammaStatus.ZERO
    inclusion = included.sum(axis=0) / S
    gamma_mean = _conditional_mean(gamma, included)
    proxy_inc, proxy_mean = [], []
    for t in range(len(first.theory_names)):
        m = np.concatenate([c.models[t] for c in chains])
        b = np.concatenate([c.beta[t] for c in chains])
        proxy_inc.append(m.sum(axis=0) / S)
        proxy_mean.append(_conditional_mean(b, m))
    index_mean = sum(c.index_sum for c in chains) / S
    pooled_n = S * first.n
    mean = sum(c.index_pooled_sum for c in chains) / pooled_n
    cov = sum(c.index_pooled_cross for c in chains) / pooled_n - np.outer(mean, mean)
    sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = cov / np.outer(sd, sd)
    corr[np.outer(sd, sd) <= 1e-300] = np.nan
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    chain_inc = np.array([(c.status != GammaStatus.ZERO).mean(axis=0) for c in chains if len(c)])
    summary = PosteriorSummary(
        theory_names=first.theory_names,
        outcome_names=first.outcome_names,
        proxy_names=first.proxy_names,
        n_samples=S,
        inclusion=inclusion,
        gamma_mean=gamma_mean,
        proxy_inclusion=proxy_inc,
        proxy_mean=proxy_mean,
        index_mean=index_mean,
        index_corr=corr,
        chain_inclusion=chain_inc,
        labels=first.labels,
    )
    if group is not None:
        if not first.labels or group not in first.labels:
            raise KeyError(f"group column {group!r} is not among the observation labels")
        keys = np.asarray(first.labels[group])
        uniq = np.unique(keys)
        summary.group_name = group
        summary.groups = uniq
        summary.group_means = np.array([index_mean[keys == g].mean(axis=0) for g in uniq])
    return summary


def check_records(chains: list[ChainSamples], spec: ModelSpec, data: Dataset) -> list[str]:
    """Validate every stored record; returns the violations found."""
    problems = []
    for c in chains:
        for k in range(len(c)):
            problems += [f"chain {c.chain} record {k}: {p}" for p in validate_state(c.decode(k), spec, data)]
    return problems
