"""Domain types for the theory-averaging model and the state validity rules.

A model has ``T`` latent theories and ``R`` outcome equations.  Theory ``t``
owns a block of proxies ``X_t`` (``n x p_t``) and a latent index vector
``I_t`` with

    I_it = X_it' beta_t + eps_it,    eps_it ~ N(0, 1/nu_t)
    beta_Mt ~ N(0, nu_t * Id)

Outcome ``r`` has mean ``mu_ir = alpha_r + sum_t gamma_rt * I_it`` where each
``gamma_rt`` is Zero, One (identification anchor) or a Free real value.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Mapping, Sequence

import numpy as np


class Family(str, Enum):
    LOGISTIC = "logistic"
    QUANTILE = "quantile"
    GEV = "gev"


class GammaStatus(IntEnum):
    ZERO = 0
    ONE = 1
    FREE = 2


@dataclass(frozen=True)
class Theory:
    name: str
    proxies: tuple[str, ...]
    nu: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "proxies", tuple(self.proxies))
        if not self.proxies:
            raise ValueError(f"theory {self.name!r} needs at least one proxy")
        if len(set(self.proxies)) != len(self.proxies):
            raise ValueError(f"theory {self.name!r} has duplicate proxy names")
        if not (np.isfinite(self.nu) and self.nu > 0):
            raise ValueError(f"theory {self.name!r}: nu must be positive, got {self.nu}")

    @property
    def p(self) -> int:
        return len(self.proxies)


@dataclass(frozen=True)
class Outcome:
    name: str
    family: Family
    tau: float | None = None
    column: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.QUANTILE:
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ValueError(f"outcome {self.name!r}: quantile level tau must lie in (0, 1)")
        elif self.tau is not None:
            raise ValueError(f"outcome {self.name!r}: tau only applies to quantile outcomes")
        if self.column is None:
            object.__setattr__(self, "column", self.name)

    @property
    def has_kappa(self) -> bool:
        return self.family is not Family.LOGISTIC

    @property
    def has_xi(self) -> bool:
        return self.family is Family.GEV


@dataclass(frozen=True)
class ModelSpec:
    theories: tuple[Theory, ...]
    outcomes: tuple[Outcome, ...]

    def __post_init__(self):
        object.__setattr__(self, "theories", tuple(self.theories))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if not self.theories:
            raise ValueError("at least one theory is required")
        if not self.outcomes:
            raise ValueError("at least one outcome is required")
        for kind, names in (("theory", [t.name for t in self.theories]),
                            ("outcome", [o.name for o in self.outcomes])):
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate {kind} names: {names}")

    @property
    def T(self) -> int:
        return len(self.theories)

    @property
    def R(self) -> int:
        return len(self.outcomes)

    @property
    def p(self) -> tuple[int, ...]:
        return tuple(th.p for th in self.theories)

    @property
    def nu(self) -> np.ndarray:
        return np.array([th.nu for th in self.theories], dtype=float)


def _proxy_correlation(X: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    p = X.shape[1]
    if X.shape[0] < 2:
        return np.eye(p), tuple(range(p))
    sd = X.std(axis=0)
    constant = tuple(int(j) for j in np.flatnonzero(sd == 0))
    Z = np.zeros_like(X, dtype=float)
    ok = sd > 0
    Z[:, ok] = (X[:, ok] - X[:, ok].mean(axis=0)) / sd[ok]
    C = Z.T @ Z / X.shape[0]
    C[~ok, :] = 0.0
    C[:, ~ok] = 0.0
    np.fill_diagonal(C, 1.0)
    return C, constant


@dataclass
class Dataset:
    """Proxy blocks, outcomes and the presence mask.

    ``mask[i, r]`` is True when ``Y[i, r]`` was observed.  Cells of ``Y`` where
    the mask is False are never read.
    """

    X: Sequence[np.ndarray]
    Y: np.ndarray
    mask: np.ndarray
    labels: Mapping[str, np.ndarray] | None = None
    correlations: list[np.ndarray] = field(init=False, repr=False)
    constant_proxies: list[tuple[int, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        self.X = [np.ascontiguousarray(x, dtype=float) for x in self.X]
        self.Y = np.asarray(self.Y, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.Y.ndim != 2 or self.mask.shape != self.Y.shape:
            raise ValueError("Y and mask must be n x R arrays of the same shape")
        n = self.Y.shape[0]
        for t, x in enumerate(self.X):
            if x.ndim != 2 or x.shape[0] != n:
                raise ValueError(f"X[{t}] must have {n} rows")
            if not np.all(np.isfinite(x)):
                raise ValueError(f"X[{t}] contains non-finite proxy values")
        if not np.all(np.isfinite(self.Y[self.mask])):
            raise ValueError("present outcome cells must be finite")
        # missing cells hold 0 so vectorised code never sees NaN
        self.Y = np.where(self.mask, self.Y, 0.0)
        if self.labels is not None:
            self.labels = {k: np.asarray(v) for k, v in self.labels.items()}
            for k, v in self.labels.items():
                if len(v) != n:
                    raise ValueError(f"label column {k!r} has {len(v)} entries, expected {n}")
        pairs = [_proxy_correlation(x) for x in self.X]
        self.correlations = [c for c, _ in pairs]
        self.constant_proxies = [k for _, k in pairs]
        self._xtx = [x.T @ x for x in self.X]
        self._present = [np.flatnonzero(self.mask[:, r]) for r in range(self.R)]

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def R(self) -> int:
        return self.Y.shape[1]

    @property
    def T(self) -> int:
        return len(self.X)

    def xtx(self, t: int) -> np.ndarray:
        return self._xtx[t]

    def present(self, r: int) -> np.ndarray:
        """Row indices where outcome ``r`` is observed."""
        return self._present[r]

    def present_counts(self) -> np.ndarray:
        return self.mask.sum(axis=0)

    def check_against(self, spec: ModelSpec) -> None:
        if self.T != spec.T or self.R != spec.R:
            raise ValueError(f"dataset has T={self.T}, R={self.R}; spec has T={spec.T}, R={spec.R}")
        for t, th in enumerate(spec.theories):
            if self.X[t].shape[1] != th.p:
                raise ValueError(f"theory {th.name!r}: spec lists {th.p} proxies, data has {self.X[t].shape[1]}")
        for r, out in enumerate(spec.outcomes):
            if out.family is Family.LOGISTIC:
                y = self.Y[self.present(r), r]
                if not np.all((y == 0) | (y == 1)):
                    raise ValueError(f"logistic outcome {out.name!r} has values outside {{0, 1}}")


@dataclass
class ChainState:
    """One MCMC state.  Mutated in place by the kernels.

    ``gamma`` holds the numeric loading (0 for Zero, 1 for One) and ``status``
    the matching :class:`GammaStatus`; both are ``R x T``.  ``kappa`` is NaN for
    logistic outcomes and ``xi`` is NaN for everything except GEV outcomes.
    ``nu`` is part of the state because anchor rebalancing rescales it.
    """

    models: list[np.ndarray]
    beta: list[np.ndarray]
    index: np.ndarray
    status: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    kappa: np.ndarray
    xi: np.ndarray
    nu: np.ndarray

    def copy(self) -> "ChainState":
        return copy.deepcopy(self)

    @property
    def T(self) -> int:
        return self.index.shape[1]

    @property
    def R(self) -> int:
        return self.gamma.shape[0]

    def loadings(self, t: int) -> np.ndarray:
        """Outcome rows where theory ``t`` has a non-Zero loading, ascending."""
        return np.flatnonzero(self.status[:, t] != GammaStatus.ZERO)

    def active(self, t: int) -> bool:
        return bool(np.any(self.status[:, t] != GammaStatus.ZERO))

    def anchor(self, t: int) -> int | None:
        rows = self.loadings(t)
        return int(rows[0]) if rows.size else None

    def set_gamma(self, r: int, t: int, status: GammaStatus, value: float | None = None) -> None:
        status = GammaStatus(status)
        self.status[r, t] = status
        if status is GammaStatus.ZERO:
            self.gamma[r, t] = 0.0
        elif status is GammaStatus.ONE:
            self.gamma[r, t] = 1.0
        else:
            self.gamma[r, t] = float(value)

    def means(self) -> np.ndarray:
        """All outcome means, ``n x R``."""
        return self.alpha + self.index @ self.gamma.T


def mean_value(state: ChainState, i: int, r: int) -> float:
    return float(state.alpha[r] + state.index[i] @ state.gamma[r])


def scale_free_indices(state: ChainState, spec: ModelSpec | None = None) -> np.ndarray:
    """``nu_t * I_it`` for every observation and theory.

    ``nu`` is read from the state; ``spec`` is accepted for symmetry with the
    other helpers but its fixed ``nu`` only seeds the chain.
    """
    return state.index * state.nu


def gev_support(y: np.ndarray, mu: np.ndarray, kappa: float, xi: float) -> np.ndarray:
    return 1.0 + xi * np.exp(kappa) * (y - mu)


def validate_state(state: ChainState, spec: ModelSpec, data: Dataset | None = None) -> list[str]:
    """Every violated invariant, as human-readable strings.  Empty means valid."""
    problems: list[str] = []
    T, R = spec.T, spec.R
    if state.gamma.shape != (R, T) or state.status.shape != (R, T):
        return [f"gamma/status shape {state.gamma.shape} does not match R x T = {(R, T)}"]
    if data is not None and state.index.shape != (data.n, T):
        return [f"index shape {state.index.shape} does not match n x T = {(data.n, T)}"]
    for t, th in enumerate(spec.theories):
        m = np.asarray(state.models[t], dtype=bool)
        b = state.beta[t]
        if m.shape != (th.p,) or b.shape != (th.p,):
            problems.append(f"theory {th.name}: model/beta length differs from {th.p} proxies")
            continue
        if not m.any():
            problems.append(f"theory {th.name}: empty model")
        if np.any(b[~m] != 0):
            problems.append(f"theory {th.name}: nonzero coefficient outside the model")
        if not np.all(np.isfinite(b)):
            problems.append(f"theory {th.name}: non-finite coefficient")
        if not (np.isfinite(state.nu[t]) and state.nu[t] > 0):
            problems.append(f"theory {th.name}: nu must be positive, got {state.nu[t]}")
        rows = state.loadings(t)
        col = state.status[:, t]
        if rows.size == 0:
            if np.any(state.index[:, t] != 0):
                problems.append(f"theory {th.name}: inactive theory with nonzero index")
        else:
            if col[rows[0]] != GammaStatus.ONE:
                problems.append(f"theory {th.name}: missing identification anchor")
            if np.any(col[rows[1:]] != GammaStatus.FREE):
                problems.append(f"theory {th.name}: anchor is not at the smallest outcome index")
            if not np.all(np.isfinite(state.index[:, t])):
                problems.append(f"theory {th.name}: non-finite index")
        for r in range(R):
            s, g = col[r], state.gamma[r, t]
            if s not in (GammaStatus.ZERO, GammaStatus.ONE, GammaStatus.FREE):
                problems.append(f"gamma[{r},{t}]: unknown status {s}")
            elif s == GammaStatus.ZERO and g != 0:
                problems.append(f"gamma[{r},{t}]: Zero status with value {g}")
            elif s == GammaStatus.ONE and g != 1:
                problems.append(f"gamma[{r},{t}]: One status with value {g}")
            elif s == GammaStatus.FREE and not np.isfinite(g):
                problems.append(f"gamma[{r},{t}]: non-finite Free value")
    for r, out in enumerate(spec.outcomes):
        if not np.isfinite(state.alpha[r]):
            problems.append(f"outcome {out.name}: non-finite intercept")
        if out.has_kappa and not np.isfinite(state.kappa[r]):
            problems.append(f"outcome {out.name}: non-finite kappa")
        if out.has_xi and not np.isfinite(state.xi[r]):
            problems.append(f"outcome {out.name}: non-finite xi")
    if data is not None:
        mu = state.means()
        for r, out in enumerate(spec.outcomes):
            if out.family is Family.GEV:
                rows = data.present(r)
                h = gev_support(data.Y[rows, r], mu[rows, r], state.kappa[r], state.xi[r])
                if np.any(~(h > 0)):
                    problems.append(f"outcome {out.name}: GEV support violated at {int(np.sum(~(h > 0)))} observations")
    return problems
