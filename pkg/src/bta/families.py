"""Outcome likelihoods and their analytic derivatives.

Every function is vectorised over observations.  ``FamilyEval`` carries the
per-observation log density and its first two derivatives in the mean ``mu``;
``Derivs`` carries a summed log posterior ``(f, f', f'')`` for one scalar
parameter with its standard normal prior already included.

GEV parameterisation (scale ``exp(-kappa)``, shape ``xi``)::

    h(y) = 1 + xi * exp(kappa) * (y - mu),  h > 0
    log p = kappa - (1 + 1/xi) log h - h**(-1/xi)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ShapeTooSmall, SupportViolation
from .model import Family, Outcome

XI_MIN = 1e-3


class FamilyEval(NamedTuple):
    loglik: np.ndarray
    dmu: np.ndarray
    d2mu: np.ndarray


class Derivs(NamedTuple):
    value: float
    first: float
    second: float


def _arr(*xs):
    return [np.asarray(x, dtype=float) for x in xs]


def _maybe_scalar(ev: FamilyEval) -> FamilyEval:
    if np.ndim(ev.loglik) == 0:
        return FamilyEval(*(float(v) for v in ev))
    return ev


# -- logistic ---------------------------------------------------------------

def logistic_eval(y, mu) -> FamilyEval:
    """Bernoulli log mass with logit link, safe for large ``|mu|``."""
    y, mu = _arr(y, mu)
    softplus = np.logaddexp(0.0, mu)
    loglik = y * mu - softplus
    p = np.exp(mu - softplus)
    # p * (1 - p) without cancellation when |mu| is large
    d2mu = -np.exp(-softplus - np.logaddexp(0.0, -mu))
    return _maybe_scalar(FamilyEval(loglik, y - p, d2mu))


# -- asymmetric Laplace (quantile) --------------------------------------------

def pinball(z, tau):
    z = np.asarray(z, dtype=float)
    return z * (tau - (z < 0))


def quantile_eval(y, mu, kappa: float, tau: float) -> FamilyEval:
    """Asymmetric Laplace with log precision ``kappa`` and level ``tau``.

    The indicator ``1{y < mu}`` is strict, so at ``y == mu`` the slope is
    ``exp(kappa) * tau``.
    """
    y, mu = _arr(y, mu)
    z = y - mu
    scale = np.exp(kappa)
    loglik = np.log(tau * (1.0 - tau)) + kappa - scale * pinball(z, tau)
    dmu = scale * (tau - (z < 0))
    return _maybe_scalar(FamilyEval(loglik, dmu, np.zeros_like(loglik)))


def quantile_kappa_derivs(y, mu, kappa: float, tau: float) -> Derivs:
    """Log posterior of ``kappa`` (N(0,1) prior) given present observations."""
    y, mu = _arr(y, mu)
    n_eff = y.size
    S = float(np.sum(pinball(y - mu, tau)))
    eS = np.exp(kappa) * S
    return Derivs(n_eff * kappa - eS - 0.5 * kappa**2, n_eff - eS - kappa, -eS - 1.0)


# -- GEV -------------------------------------------------------------------

@dataclass
class GevAux:
    """Intermediate GEV quantities, named after their roles in the derivations.

    ``a, da, d2a`` are the log density and its ``mu`` derivatives; ``b1, b2``
    feed the ``kappa`` derivatives; ``g1, g2, dg1, dg2, d1..d4`` feed the
    ``xi`` derivatives, with ``g2 = h**(-1/xi)``.
    """

    h: np.ndarray
    log_h: np.ndarray
    a: np.ndarray
    da: np.ndarray
    d2a: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    dg1: np.ndarray
    dg2: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray


def gev_aux(y, mu, kappa: float, xi: float) -> GevAux:
    y, mu = _arr(y, mu)
    if xi == 0:
        raise ShapeTooSmall("GEV shape xi must be nonzero")
    u = np.exp(kappa)
    z = y - mu
    w = u * z
    h = 1.0 + xi * w
    if np.any(~(h > 0)):
        raise SupportViolation(f"GEV support h > 0 violated at {int(np.sum(~(h > 0)))} observation(s)")
    log_h = np.log1p(xi * w)
    inv_xi = 1.0 / xi
    g1 = (1.0 + inv_xi) * log_h
    g2 = np.exp(-inv_xi * log_h)          # h^(-1/xi)
    g2h = g2 / h                          # h^(-1/xi - 1)
    a = kappa - g1 - g2
    da = (xi + 1.0) * u / h - u * g2h
    d2a = xi * (xi + 1.0) * u**2 / h**2 - (xi + 1.0) * u**2 * g2h / h
    b1 = w * g2h
    b2 = (xi + 1.0) * w**2 * g2h / h
    w_h = w / h
    dg1 = -log_h * inv_xi**2 + (1.0 + inv_xi) * w_h
    dg2 = g2 * (log_h * inv_xi**2 - inv_xi * w_h)
    d1 = -2.0 * inv_xi**3 * log_h + inv_xi**2 * w_h
    d2 = inv_xi**2 * w_h + (1.0 + inv_xi) * w_h**2
    d3 = dg2 * log_h * inv_xi**2 + g2 * (-2.0 * inv_xi**3 * log_h + inv_xi**2 * w_h)
    d4 = dg2 * inv_xi * w_h - g2 * (inv_xi**2 * w_h + inv_xi * w_h**2)
    return GevAux(h, log_h, a, da, d2a, b1, b2, g1, g2, dg1, dg2, d1, d2, d3, d4)


def gev_eval(y, mu, kappa: float, xi: float) -> FamilyEval:
    """GEV log density and ``mu`` derivatives; raises :class:`SupportViolation`."""
    aux = gev_aux(y, mu, kappa, xi)
    return _maybe_scalar(FamilyEval(aux.a, aux.da, aux.d2a))


def gev_kappa_derivs(y, mu, kappa: float, xi: float) -> Derivs:
    aux = gev_aux(y, mu, kappa, xi)
    w = np.exp(kappa) * (np.asarray(y, dtype=float) - np.asarray(mu, dtype=float))
    first = np.sum(1.0 - (xi + 1.0) * w / aux.h + aux.b1) - kappa
    second = np.sum(-(xi + 1.0) * w / aux.h**2 + aux.b1 - aux.b2) - 1.0
    return Derivs(float(np.sum(aux.a) - 0.5 * kappa**2), float(first), float(second))


def gev_xi_derivs(y, mu, kappa: float, xi: float) -> Derivs:
    if abs(xi) < XI_MIN:
        raise ShapeTooSmall(f"|xi| = {abs(xi):.3g} is below XI_MIN = {XI_MIN}")
    aux = gev_aux(y, mu, kappa, xi)
    value = np.sum(kappa - aux.g1 - aux.g2) - 0.5 * xi**2
    first = np.sum(-aux.dg1 - aux.dg2) - xi
    second = np.sum(aux.d1 + aux.d2 - aux.d3 + aux.d4) - 1.0
    return Derivs(float(value), float(first), float(second))


# -- dispatch ----------------------------------------------------------------

def evaluate(outcome: Outcome, y, mu, kappa: float = np.nan, xi: float = np.nan,
             *, strict: bool = True) -> FamilyEval:
    """Family evaluation for one outcome equation.

    With ``strict=False`` GEV points outside the support get ``loglik = -inf``
    and zero derivatives instead of raising.
    """
    fam = outcome.family
    if fam is Family.LOGISTIC:
        return logistic_eval(y, mu)
    if fam is Family.QUANTILE:
        return quantile_eval(y, mu, kappa, outcome.tau)
    if strict:
        return gev_eval(y, mu, kappa, xi)
    y, mu = _arr(y, mu)
    h = 1.0 + xi * np.exp(kappa) * (y - mu)
    ok = h > 0
    if ok.all():
        return gev_eval(y, mu, kappa, xi)
    loglik = np.full(np.shape(h), -np.inf)
    dmu = np.zeros(np.shape(h))
    d2mu = np.zeros(np.shape(h))
    if ok.any():
        ev = gev_eval(y[ok], mu[ok], kappa, xi)
        loglik[ok], dmu[ok], d2mu[ok] = ev
    return _maybe_scalar(FamilyEval(loglik, dmu, d2mu))


def loglik_sum(outcome: Outcome, y, mu, kappa: float = np.nan, xi: float = np.nan) -> float:
    """Summed log likelihood; ``-inf`` when any GEV point leaves the support."""
    return float(np.sum(evaluate(outcome, y, mu, kappa, xi, strict=False).loglik))


def proposal_terms(outcome: Outcome, ev: FamilyEval, kappa: float = np.nan):
    """``(dmu, d2mu)`` used to build Laplace proposals.

    The asymmetric Laplace log density is piecewise linear in ``mu``: its
    second derivative is zero and its gradient jumps at every observation, so
    a Newton step lands far from the mode.  For that family the gradient is
    dropped and the expected information ``exp(2 kappa) tau (1 - tau)`` per
    observation sets the proposal precision.  The MH ratio uses exact log
    densities, so the chain stays exact whatever the proposal.
    """
    if outcome.family is Family.QUANTILE:
        tau = outcome.tau
        shape = np.shape(ev.d2mu)
        return np.zeros(shape), np.full(shape, -np.exp(2.0 * kappa) * tau * (1.0 - tau))
    return ev.dmu, ev.d2mu


def alpha_derivs(outcome: Outcome, y, mu, alpha: float, kappa: float = np.nan,
                 xi: float = np.nan, *, proposal: bool = False) -> Derivs:
    """Log posterior of the intercept; ``mu`` must already include ``alpha``.

    ``proposal=True`` swaps in :func:`proposal_terms` for the derivatives.
    """
    ev = evaluate(outcome, y, mu, kappa, xi)
    d1, d2 = proposal_terms(outcome, ev, kappa) if proposal else (ev.dmu, ev.d2mu)
    return Derivs(float(np.sum(ev.loglik) - 0.5 * alpha**2),
                  float(np.sum(d1) - alpha),
                  float(np.sum(d2) - 1.0))


def gamma_derivs(outcome: Outcome, y, mu, index, gamma: float, kappa: float = np.nan,
                 xi: float = np.nan, *, proposal: bool = False) -> Derivs:
    """Log posterior of a Free loading; ``index`` is the theory's ``I_t`` on the same rows."""
    index = np.asarray(index, dtype=float)
    ev = evaluate(outcome, y, mu, kappa, xi)
    d1, d2 = proposal_terms(outcome, ev, kappa) if proposal else (ev.dmu, ev.d2mu)
    return Derivs(float(np.sum(ev.loglik) - 0.5 * gamma**2),
                  float(np.sum(d1 * index) - gamma),
                  float(np.sum(d2 * index**2) - 1.0))


def kappa_derivs(outcome: Outcome, y, mu, kappa: float, xi: float = np.nan) -> Derivs:
    if outcome.family is Family.QUANTILE:
        return quantile_kappa_derivs(y, mu, kappa, outcome.tau)
    if outcome.family is Family.GEV:
        return gev_kappa_derivs(y, mu, kappa, xi)
    raise ValueError(f"outcome {outcome.name!r} has no kappa parameter")
