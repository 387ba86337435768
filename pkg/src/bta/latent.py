"""Gaussian latent layer: proxy regressions, model moves and index updates.

Conditioning on the index ``I_t`` turns each theory into a ridge regression
with likelihood precision ``nu`` and prior covariance ``nu * Id``, so the
coefficient posterior and the model evidence are available in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, log

import numpy as np
from scipy import linalg

from .errors import NumericalSingularity
from .families import Derivs, evaluate, proposal_terms
from .kernels import C_MIN, MHStep, mh_step
from .model import ChainState, Dataset, GammaStatus, ModelSpec

NEIGHBOR_PROB = 0.8
# determinants below this are treated as zero prior mass
DET_TOL = 1e-10
_LOG_2PI = log(2.0 * np.pi)


@dataclass
class RidgeSummary:
    Xi: np.ndarray
    beta_hat: np.ndarray
    logdet_Xi: float
    quad: float
    resid: float
    chol: np.ndarray


def _ridge(xtx: np.ndarray, xti: np.ndarray, resid: float, nu: float) -> RidgeSummary:
    p = xtx.shape[0]
    Xi = nu * xtx + np.eye(p) / nu
    try:
        L = linalg.cholesky(Xi, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalSingularity(f"ridge precision is not positive definite ({exc})") from None
    rhs = nu * xti
    beta_hat = linalg.cho_solve((L, True), rhs, check_finite=False)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    if not np.isfinite(logdet):
        raise NumericalSingularity("ridge precision has a non-finite determinant")
    return RidgeSummary(Xi, beta_hat, logdet, float(beta_hat @ rhs), resid, L)


def ridge_summary(X_M: np.ndarray, I_t: np.ndarray, nu_t: float = 1.0) -> RidgeSummary:
    """Posterior of ``beta_M`` given the index: ``N(beta_hat, Xi^-1)`` with
    ``Xi = nu X'X + Id/nu`` and ``beta_hat = Xi^-1 nu X'I``."""
    X_M = np.atleast_2d(np.asarray(X_M, dtype=float))
    I_t = np.asarray(I_t, dtype=float)
    return _ridge(X_M.T @ X_M, X_M.T @ I_t, float(I_t @ I_t), nu_t)


def _log_marginal(rs: RidgeSummary, n: int, nu: float) -> float:
    p = rs.Xi.shape[0]
    return (0.5 * n * (log(nu) - _LOG_2PI) - 0.5 * nu * rs.resid + 0.5 * rs.quad
            - 0.5 * (rs.logdet_Xi + p * log(nu)))


def log_marginal_index(X_M: np.ndarray, I_t: np.ndarray, nu_t: float = 1.0) -> float:
    """``log p(I_t | M)`` with ``beta_M`` integrated out, including all constants.

    Equals ``log N(I; 0, XX' nu + Id/nu)``; the determinant enters as
    ``-1/2 log|nu * Xi|``.
    """
    rs = ridge_summary(X_M, I_t, nu_t)
    return _log_marginal(rs, len(np.asarray(I_t)), nu_t)


def log_model_prior(model, C: np.ndarray) -> float:
    """``log |C_M|``; ``-inf`` for a (near) singular sub-correlation matrix."""
    m = np.asarray(model, dtype=bool)
    if not m.any():
        raise ValueError("the empty model is excluded")
    sign, logdet = np.linalg.slogdet(C[np.ix_(m, m)])
    if sign <= 0 or logdet < log(DET_TOL):
        return -np.inf
    return float(logdet)


# -- model proposals ---------------------------------------------------------------

def neighbors(model: np.ndarray) -> list[np.ndarray]:
    """Add, drop (never to empty) and swap moves, each a distinct model."""
    m = np.asarray(model, dtype=bool)
    inside, outside = np.flatnonzero(m), np.flatnonzero(~m)
    out = []
    for j in outside:
        nb = m.copy(); nb[j] = True; out.append(nb)
    if inside.size > 1:
        for j in inside:
            nb = m.copy(); nb[j] = False; out.append(nb)
    for j in inside:
        for k in outside:
            nb = m.copy(); nb[j] = False; nb[k] = True; out.append(nb)
    return out


def _is_neighbor(a: np.ndarray, b: np.ndarray) -> bool:
    diff = int(np.sum(a != b))
    if diff == 1:
        return bool(b.any())
    return diff == 2 and a.sum() == b.sum()


def model_proposal_logprob(current, proposed) -> float:
    """``log q(current -> proposed)`` under the mixed neighbour/jump kernel."""
    a = np.asarray(current, dtype=bool)
    b = np.asarray(proposed, dtype=bool)
    p = a.size
    q = (1.0 - NEIGHBOR_PROB) / (p * comb(p, int(b.sum())))
    if _is_neighbor(a, b):
        q += NEIGHBOR_PROB / len(neighbors(a))
    elif np.array_equal(a, b) and not neighbors(a):
        q += NEIGHBOR_PROB
    return log(q)


@dataclass
class ModelProposal:
    model: np.ndarray
    log_q_forward: float
    log_q_reverse: float
    kind: str


def propose_model_move(model, rng: np.random.Generator) -> ModelProposal:
    """Neighbour move with probability 0.8, otherwise an independent jump to a
    uniformly chosen subset whose size is uniform on ``1..p``."""
    m = np.asarray(model, dtype=bool)
    p = m.size
    u = rng.random()
    k = int(rng.integers(1, p + 1))
    choice = rng.random()
    if u < NEIGHBOR_PROB:
        nbs = neighbors(m)
        new = nbs[int(choice * len(nbs))] if nbs else m.copy()
        kind = "neighbor"
    else:
        new = np.zeros(p, dtype=bool)
        new[rng.permutation(p)[:k]] = True
        kind = "jump"
    if np.array_equal(new, m):
        return ModelProposal(new, 0.0, 0.0, "stay")
    return ModelProposal(new, model_proposal_logprob(m, new), model_proposal_logprob(new, m), kind)


# -- Gibbs and CBF -----------------------------------------------------------------

def _theory_ridge(data: Dataset, t: int, model: np.ndarray, I_t: np.ndarray, nu: float) -> RidgeSummary:
    idx = np.flatnonzero(model)
    xtx = data.xtx(t)[np.ix_(idx, idx)]
    xti = data.X[t][:, idx].T @ I_t
    return _ridge(xtx, xti, float(I_t @ I_t), nu)


def sample_beta(rs: RidgeSummary, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(rs.beta_hat.size)
    return rs.beta_hat + linalg.solve_triangular(rs.chol, z, lower=True, trans="T", check_finite=False)


def gibbs_beta(state: ChainState, data: Dataset, t: int, rng: np.random.Generator) -> np.ndarray:
    """Redraw ``beta_t`` given ``M_t`` and ``I_t``; zero off the model.

    An inactive theory has no index, so its coefficients come from the prior
    ``N(0, nu Id)``.
    """
    m = state.models[t]
    nu = state.nu[t]
    beta = np.zeros(m.size)
    if state.active(t):
        rs = _theory_ridge(data, t, m, state.index[:, t], nu)
        beta[m] = sample_beta(rs, rng)
    else:
        beta[m] = np.sqrt(nu) * rng.standard_normal(int(m.sum()))
    state.beta[t] = beta
    return beta


def model_log_target(data: Dataset, t: int, model: np.ndarray, I_t: np.ndarray | None,
                     nu: float, C: np.ndarray | None = None) -> float:
    """Log evidence plus log prior of ``model``; prior only when ``I_t`` is None."""
    prior = log_model_prior(model, data.correlations[t] if C is None else C)
    if not np.isfinite(prior) or I_t is None:
        return prior
    return prior + _log_marginal(_theory_ridge(data, t, model, I_t, nu), len(I_t), nu)


def cbf_model_step(state: ChainState, data: Dataset, t: int, rng: np.random.Generator,
                   C: np.ndarray | None = None) -> bool:
    """One Metropolis-Hastings move on ``M_t`` using the index-conditional
    evidence times ``|C_M|``.  Refreshes ``beta_t`` on acceptance.  Returns
    whether the model changed."""
    m = state.models[t]
    prop = propose_model_move(m, rng)
    u = rng.random()
    if prop.kind == "stay":
        return False
    I_t = state.index[:, t] if state.active(t) else None
    nu = state.nu[t]
    try:
        new = model_log_target(data, t, prop.model, I_t, nu, C)
        if not np.isfinite(new):
            return False
        old = model_log_target(data, t, m, I_t, nu, C)
    except NumericalSingularity:
        return False
    log_ratio = new - old + prop.log_q_reverse - prop.log_q_forward
    if np.log(u) < log_ratio:
        state.models[t] = prop.model
        gibbs_beta(state, data, t, rng)
        return True
    return False


# -- index updates -----------------------------------------------------------------

def index_target(state: ChainState, spec: ModelSpec, data: Dataset, t: int, rows: np.ndarray,
                 proposal: bool = True):
    """Vectorised log conditional of ``I_it`` over ``rows``: the loaded outcome
    likelihoods (present cells only) plus the ``N(x'beta, 1/nu)`` prior.

    With ``proposal=True`` (the sampler's setting) ``first``/``second`` are
    the proposal-building derivatives, which differ from the exact ones only
    for quantile outcomes (see ``proposal_terms``).
    """
    nu = state.nu[t]
    prior_mean = data.X[t][rows] @ state.beta[t]
    mu_all = state.means()[rows]
    loaded = [int(r) for r in state.loadings(t)]
    terms = []
    for r in loaded:
        g = state.gamma[r, t]
        present = data.mask[rows, r]
        base = mu_all[:, r] - g * state.index[rows, t]
        terms.append((spec.outcomes[r], g, present, data.Y[rows, r], base, state.kappa[r], state.xi[r]))

    def target(x):
        x = np.asarray(x, dtype=float)
        resid = x - prior_mean
        value = -0.5 * nu * resid**2
        first = -nu * resid
        second = np.full(x.shape, -nu)
        for out, g, present, y, base, kappa, xi in terms:
            ev = evaluate(out, y, base + g * x, kappa, xi, strict=False)
            d1, d2 = proposal_terms(out, ev, kappa) if proposal else (ev.dmu, ev.d2mu)
            value = value + np.where(present, ev.loglik, 0.0)
            first = first + np.where(present, g * d1, 0.0)
            second = second + np.where(present, g * g * d2, 0.0)
        return Derivs(value, first, second)

    return target


def update_indices(state: ChainState, spec: ModelSpec, data: Dataset, t: int,
                   rng: np.random.Generator, rows=None, c_min: float = C_MIN) -> MHStep:
    """Laplace-MH update of ``I_it`` for every ``i`` in ``rows`` (default all).

    The per-observation conditionals are independent given everything else,
    so the update is vectorised.
    """
    if not state.active(t):
        raise ValueError(f"theory {t} is inactive; its index is fixed at zero")
    rows = np.arange(data.n) if rows is None else np.atleast_1d(np.asarray(rows, dtype=int))
    step = mh_step(index_target(state, spec, data, t, rows), state.index[rows, t], rng, c_min)
    state.index[rows, t] = step.value
    return step


def update_index(state: ChainState, spec: ModelSpec, data: Dataset, t: int, i: int,
                 rng: np.random.Generator) -> float:
    step = update_indices(state, spec, data, t, rng, rows=[i])
    return float(step.value[0])
