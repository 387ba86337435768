"""Laplace-expansion Metropolis-Hastings and the reversible-jump moves on gamma.

All kernels mutate the :class:`~bta.model.ChainState` they are handed and
consume a fixed number of draws from the generator, so a chain is replayable
from its seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DegenerateScale, ShapeTooSmall, SupportViolation
from .families import (
    XI_MIN,
    Derivs,
    alpha_derivs,
    gamma_derivs,
    gev_xi_derivs,
    kappa_derivs,
    loglik_sum,
)
from .model import ChainState, Dataset, GammaStatus, ModelSpec

C_MIN = 1e-3
# rescaled nu must stay within [nu0 / NU_SPAN, nu0 * NU_SPAN]
NU_SPAN = 100.0
MIN_SCALE = 1e-12

Target = Callable[[np.ndarray], Derivs]


class LaplaceProposal(NamedTuple):
    mean: np.ndarray
    precision: np.ndarray
    source: np.ndarray


class MHStep(NamedTuple):
    value: np.ndarray
    accepted: np.ndarray
    log_ratio: np.ndarray


def laplace_proposal(first, second, tau, c_min: float = C_MIN) -> LaplaceProposal:
    """Gaussian proposal ``N(b/c, 1/c)`` from a quadratic expansion at ``tau``.

    ``b/c`` is computed as the Newton step ``tau + f'/c``.  Curvature below
    ``c_min`` is floored; non-positive curvature falls back to a random walk
    centred at ``tau``.
    """
    first, second, tau = (np.asarray(v, dtype=float) for v in (first, second, tau))
    c = -second
    positive = c > 0
    safe_c = np.where(positive, c, 1.0)
    mean = np.where(positive, tau + first / safe_c, tau)
    precision = np.maximum(np.where(positive, c, c_min), c_min)
    if mean.ndim == 0:
        return LaplaceProposal(float(mean), float(precision), float(tau))
    return LaplaceProposal(mean, precision, tau)


def _log_q(x, prop: LaplaceProposal):
    return 0.5 * np.log(prop.precision) - 0.5 * prop.precision * (x - prop.mean) ** 2


def mh_step(target: Target, tau, rng: np.random.Generator, c_min: float = C_MIN) -> MHStep:
    """One Laplace-MH update, elementwise over ``tau``.

    ``target(x)`` returns ``Derivs`` (arrays allowed); a ``value`` of ``-inf``
    marks a point outside the support and is always rejected.
    """
    tau = np.asarray(tau, dtype=float)
    d0 = target(tau)
    prop = laplace_proposal(d0.first, d0.second, tau, c_min)
    z = rng.standard_normal(tau.shape)
    u = rng.random(tau.shape)
    new = prop.mean + z / np.sqrt(prop.precision)
    d1 = target(new)
    ok = np.isfinite(d1.value)
    back = laplace_proposal(np.where(ok, d1.first, 0.0), np.where(ok, d1.second, -1.0), new, c_min)
    with np.errstate(invalid="ignore", divide="ignore"):
        log_ratio = np.where(ok, d1.value - d0.value + _log_q(tau, back) - _log_q(new, prop), -np.inf)
        accepted = np.log(u) < log_ratio
    value = np.where(accepted, new, tau)
    if tau.ndim == 0:
        return MHStep(float(value), bool(accepted), float(log_ratio))
    return MHStep(value, accepted, log_ratio)


def _guard(fn: Callable[[float], Derivs]) -> Target:
    def wrapped(x):
        try:
            return fn(float(x))
        except (SupportViolation, ShapeTooSmall):
            return Derivs(-np.inf, np.nan, np.nan)
    return wrapped


# -- targets for the outcome-level parameters --------------------------------------

def _slice(state: ChainState, data: Dataset, r: int):
    rows = data.present(r)
    return rows, data.Y[rows, r], state.alpha[r] + state.index[rows] @ state.gamma[r]


def alpha_target(state: ChainState, spec: ModelSpec, data: Dataset, r: int) -> Target:
    out = spec.outcomes[r]
    _, y, mu = _slice(state, data, r)
    base = mu - state.alpha[r]
    kappa, xi = state.kappa[r], state.xi[r]
    return _guard(lambda a: alpha_derivs(out, y, base + a, a, kappa, xi, proposal=True))


def kappa_target(state: ChainState, spec: ModelSpec, data: Dataset, r: int) -> Target:
    out = spec.outcomes[r]
    _, y, mu = _slice(state, data, r)
    xi = state.xi[r]
    return _guard(lambda k: kappa_derivs(out, y, mu, k, xi))


def xi_target(state: ChainState, spec: ModelSpec, data: Dataset, r: int) -> Target:
    _, y, mu = _slice(state, data, r)
    kappa = state.kappa[r]
    return _guard(lambda x: gev_xi_derivs(y, mu, kappa, x))


def gamma_target(state: ChainState, spec: ModelSpec, data: Dataset, r: int, t: int) -> Target:
    if state.status[r, t] != GammaStatus.FREE:
        raise ValueError(f"gamma[{r},{t}] is {GammaStatus(state.status[r, t]).name}, not FREE")
    out = spec.outcomes[r]
    rows, y, mu = _slice(state, data, r)
    I = state.index[rows, t]
    base = mu - state.gamma[r, t] * I
    kappa, xi = state.kappa[r], state.xi[r]
    return _guard(lambda g: gamma_derivs(out, y, base + g * I, I, g, kappa, xi, proposal=True))


def update_outcome_parameters(state: ChainState, spec: ModelSpec, data: Dataset, r: int,
                              rng: np.random.Generator, stats: dict | None = None) -> None:
    """Intercept, family globals and every Free loading of outcome ``r``."""
    out = spec.outcomes[r]
    step = mh_step(alpha_target(state, spec, data, r), state.alpha[r], rng)
    state.alpha[r] = step.value
    _tally(stats, "alpha", step.accepted)
    if out.has_kappa:
        step = mh_step(kappa_target(state, spec, data, r), state.kappa[r], rng)
        state.kappa[r] = step.value
        _tally(stats, "kappa", step.accepted)
    if out.has_xi:
        step = mh_step(xi_target(state, spec, data, r), state.xi[r], rng)
        state.xi[r] = step.value
        _tally(stats, "xi", step.accepted)
    for t in range(spec.T):
        if state.status[r, t] == GammaStatus.FREE:
            step = mh_step(gamma_target(state, spec, data, r, t), state.gamma[r, t], rng)
            state.gamma[r, t] = step.value
            _tally(stats, "gamma", step.accepted)


def _tally(stats, key, accepted):
    if stats is None:
        return
    tried, took = stats.get(key, (0, 0))
    acc = np.asarray(accepted)
    stats[key] = (tried + acc.size, took + int(acc.sum()))


# -- reversible jump ------------------------------------------------------------

@dataclass
class RjOutcome:
    move: str
    r: int
    t: int
    accepted: bool
    log_ratio: float
    draw: float = float("nan")
    reason: str | None = None


def _outcome_loglik(state: ChainState, spec: ModelSpec, data: Dataset, r: int, mu_rows) -> float:
    rows = data.present(r)
    return loglik_sum(spec.outcomes[r], data.Y[rows, r], mu_rows, state.kappa[r], state.xi[r])


def _accept(log_ratio: float, u: float) -> bool:
    # u == 0 has log -inf and accepts any finite ratio
    return bool(np.isfinite(log_ratio) and (u == 0.0 or np.log(u) < log_ratio))


def _nu_ok(nu: float, nu0: float, span: float) -> bool:
    return nu0 / span <= nu <= nu0 * span


def rj_toggle_gamma(state: ChainState, spec: ModelSpec, data: Dataset, r: int, t: int,
                    rng: np.random.Generator) -> RjOutcome:
    """Birth of a Free loading ``gamma_rt ~ N(0,1)`` or death of an existing one.

    Needs an anchor at some ``r' < r``.  Prior and proposal cancel, so the
    ratio is the outcome-``r`` likelihood ratio alone.
    """
    status = state.status[r, t]
    anchor = state.anchor(t)
    rows, _, mu = _slice(state, data, r)
    I = state.index[rows, t]
    draw = rng.standard_normal()
    u = rng.random()
    if status == GammaStatus.ZERO:
        if anchor is None or anchor >= r:
            raise ValueError(f"gamma birth at ({r},{t}) needs an anchor above it")
        new_mu = mu + draw * I
        move = "gamma_birth"
    elif status == GammaStatus.FREE:
        new_mu = mu - state.gamma[r, t] * I
        draw = float("nan")
        move = "gamma_death"
    else:
        raise ValueError(f"gamma[{r},{t}] is the anchor; use rj_demote_anchor or rj_theory_toggle")
    log_ratio = _outcome_loglik(state, spec, data, r, new_mu) - _outcome_loglik(state, spec, data, r, mu)
    accepted = _accept(log_ratio, u)
    if accepted:
        if move == "gamma_birth":
            state.set_gamma(r, t, GammaStatus.FREE, draw)
        else:
            state.set_gamma(r, t, GammaStatus.ZERO)
    return RjOutcome(move, r, t, accepted, float(log_ratio), float(draw))


def _apply_rescale(state: ChainState, t: int, scale: float) -> None:
    """Divide ``I_t`` and ``beta_t`` by ``scale``; multiply ``nu_t`` and loadings by it."""
    nz = state.status[:, t] != GammaStatus.ZERO
    state.gamma[nz, t] *= scale
    state.index[:, t] /= scale
    state.beta[t] = state.beta[t] / scale
    state.nu[t] *= scale


def rescale_log_prior_ratio(state: ChainState, data: Dataset, t: int, a: float) -> float:
    """Prior, Jacobian and ``nu``-prior terms of a rebalance by ``a`` from ``state``.

    The map ``(free gammas, I, beta, nu, a) -> (a * gammas, I/a, beta/a, a*nu,
    a)`` has Jacobian ``a**(k - n - p)`` (``k`` non-Zero loadings, ``p`` model
    size).  With ``nu`` log-uniform on its box, the new Free loading's
    ``N(0,1)`` prior cancelling the proposal of ``a``, and the index and
    coefficient priors evaluated at the rescaled values, this is the log of
    everything in the ratio besides the likelihood.
    """
    nu = state.nu[t]
    m = state.models[t]
    p = int(m.sum())
    n = data.n
    nz = state.status[:, t] != GammaStatus.ZERO
    k = int(nz.sum())
    free = state.gamma[(state.status[:, t] == GammaStatus.FREE), t]
    beta = state.beta[t][m]
    resid = state.index[:, t] - data.X[t] @ state.beta[t]
    log_a = np.log(a)
    return float(-0.5 * (a * a - 1.0) * np.sum(free**2)
                 + 0.5 * nu * float(resid @ resid) * (1.0 - 1.0 / a)
                 + 0.5 * float(beta @ beta) * (1.0 - a**-3) / nu
                 + (k - 1 - 0.5 * n - 1.5 * p) * log_a)


def rj_rebalance_anchor(state: ChainState, spec: ModelSpec, data: Dataset, r: int, t: int,
                        rng: np.random.Generator, nu_span: float = NU_SPAN,
                        scale: float | None = None, exact: bool = True) -> RjOutcome:
    """Make the Zero loading ``gamma_rt`` the new anchor, above the current one.

    Draws ``a ~ N(0,1)``; every non-Zero loading of theory ``t`` is multiplied
    by ``a`` (the old anchor becomes Free with value ``a``), and
    ``I -> I/a``, ``beta -> beta/a``, ``nu -> a*nu``.  The scale-free index
    ``nu * I`` and every other outcome mean are unchanged, so only outcome
    ``r`` enters the likelihood ratio.  The rescale moves ``beta``, ``I`` and
    ``nu`` off their prior scale, so ``exact=True`` adds
    :func:`rescale_log_prior_ratio`; ``exact=False`` is the likelihood-only
    ratio, which leaves the chain slightly biased.  Non-positive draws are
    rejected, which keeps ``nu`` a precision.  ``scale`` overrides the draw.
    """
    anchor = state.anchor(t)
    if state.status[r, t] != GammaStatus.ZERO or anchor is None or anchor <= r:
        raise ValueError(f"rebalance at ({r},{t}) needs gamma_rt = Zero below the current anchor")
    draw = rng.standard_normal()
    u = rng.random()
    a = draw if scale is None else float(scale)
    if not a > MIN_SCALE:
        err = DegenerateScale(f"rescale factor {a:.3g} is not positive")
        return RjOutcome("rebalance", r, t, False, -np.inf, a, reason=str(err))
    new_nu = state.nu[t] * a
    if not _nu_ok(new_nu, spec.theories[t].nu, nu_span):
        return RjOutcome("rebalance", r, t, False, -np.inf, a, reason="nu out of range")
    rows, _, mu = _slice(state, data, r)
    new_mu = mu + state.index[rows, t] / a
    log_ratio = _outcome_loglik(state, spec, data, r, new_mu) - _outcome_loglik(state, spec, data, r, mu)
    if exact:
        log_ratio += rescale_log_prior_ratio(state, data, t, a)
    accepted = _accept(log_ratio, u)
    if accepted:
        _apply_rescale(state, t, a)
        state.status[anchor, t] = GammaStatus.FREE
        state.set_gamma(r, t, GammaStatus.ONE)
    return RjOutcome("rebalance", r, t, accepted, float(log_ratio), a)


def rj_demote_anchor(state: ChainState, spec: ModelSpec, data: Dataset, r: int, t: int,
                     rng: np.random.Generator, nu_span: float = NU_SPAN, exact: bool = True) -> RjOutcome:
    """Reverse of :func:`rj_rebalance_anchor`: drop the anchor ``r`` and promote
    the next non-Zero loading ``s`` to One, rescaling by ``a = gamma_st``."""
    rows_nz = state.loadings(t)
    if state.status[r, t] != GammaStatus.ONE or rows_nz.size < 2:
        raise ValueError(f"demotion at ({r},{t}) needs an anchor with another non-Zero loading")
    s = int(rows_nz[1])
    a = float(state.gamma[s, t])
    # same draw count as the forward move
    rng.standard_normal()
    u = rng.random()
    if not a > MIN_SCALE:
        return RjOutcome("demote", r, t, False, -np.inf, a, reason="promoted loading is not positive")
    if not _nu_ok(state.nu[t] / a, spec.theories[t].nu, nu_span):
        return RjOutcome("demote", r, t, False, -np.inf, a, reason="nu out of range")
    rows, _, mu = _slice(state, data, r)
    new_mu = mu - state.index[rows, t]
    log_ratio = _outcome_loglik(state, spec, data, r, new_mu) - _outcome_loglik(state, spec, data, r, mu)
    if exact:
        # minus the forward terms, evaluated at the state the rebalance starts from
        pre = state.copy()
        pre.set_gamma(r, t, GammaStatus.ZERO)
        _apply_rescale(pre, t, 1.0 / a)
        pre.set_gamma(s, t, GammaStatus.ONE)
        log_ratio -= rescale_log_prior_ratio(pre, data, t, a)
    accepted = _accept(log_ratio, u)
    if accepted:
        state.set_gamma(r, t, GammaStatus.ZERO)
        _apply_rescale(state, t, 1.0 / a)
        state.set_gamma(s, t, GammaStatus.ONE)
    return RjOutcome("demote", r, t, accepted, float(log_ratio), a)


def rj_theory_toggle(state: ChainState, spec: ModelSpec, data: Dataset, t: int,
                     rng: np.random.Generator, outcome: int | None = None) -> RjOutcome:
    """Switch theory ``t`` on in one outcome, or off entirely.

    Birth sets ``gamma_rt = One`` and draws ``I_t ~ N(X beta_t, 1/nu_t)``, so
    the index prior cancels the proposal density.  Death needs exactly one
    non-Zero loading and zeroes the index.  When ``outcome`` is None the birth
    outcome is picked uniformly and the ratio carries ``+-log R``.
    """
    rows_nz = state.loadings(t)
    R = spec.R
    eps = rng.standard_normal(data.n)
    pick = int(rng.integers(R))
    u = rng.random()
    pick_term = np.log(R) if outcome is None else 0.0
    if rows_nz.size == 0:
        r = pick if outcome is None else int(outcome)
        new_index = data.X[t] @ state.beta[t] + eps / np.sqrt(state.nu[t])
        rows, _, mu = _slice(state, data, r)
        new_mu = mu + new_index[rows]
        log_ratio = (_outcome_loglik(state, spec, data, r, new_mu)
                     - _outcome_loglik(state, spec, data, r, mu) + pick_term)
        accepted = _accept(log_ratio, u)
        if accepted:
            state.index[:, t] = new_index
            state.set_gamma(r, t, GammaStatus.ONE)
        return RjOutcome("theory_birth", r, t, accepted, float(log_ratio))
    if rows_nz.size != 1:
        raise ValueError(f"theory {t} is loaded in {rows_nz.size} outcomes; death needs exactly one")
    r = int(rows_nz[0])
    if outcome is not None and int(outcome) != r:
        raise ValueError(f"theory {t} is anchored at outcome {r}, not {outcome}")
    rows, _, mu = _slice(state, data, r)
    new_mu = mu - state.index[rows, t]
    log_ratio = (_outcome_loglik(state, spec, data, r, new_mu)
                 - _outcome_loglik(state, spec, data, r, mu) - pick_term)
    accepted = _accept(log_ratio, u)
    if accepted:
        state.set_gamma(r, t, GammaStatus.ZERO)
        state.index[:, t] = 0.0
    return RjOutcome("theory_death", r, t, accepted, float(log_ratio))


def rj_pair_move(state: ChainState, spec: ModelSpec, data: Dataset, r: int, t: int,
                 rng: np.random.Generator, nu_span: float = NU_SPAN, exact: bool = True) -> RjOutcome:
    """Toggle whether outcome ``r`` loads on theory ``t``, via whichever move
    fits the current status pattern.  Each branch is paired with its reverse
    under the same ``(r, t)``, so selection probabilities cancel."""
    status = state.status[r, t]
    rows_nz = state.loadings(t)
    if status == GammaStatus.ZERO:
        if rows_nz.size == 0:
            return rj_theory_toggle(state, spec, data, t, rng, outcome=r)
        if rows_nz[0] < r:
            return rj_toggle_gamma(state, spec, data, r, t, rng)
        return rj_rebalance_anchor(state, spec, data, r, t, rng, nu_span, exact=exact)
    if status == GammaStatus.FREE:
        return rj_toggle_gamma(state, spec, data, r, t, rng)
    if rows_nz.size == 1:
        return rj_theory_toggle(state, spec, data, t, rng, outcome=r)
    return rj_demote_anchor(state, spec, data, r, t, rng, nu_span, exact=exact)
