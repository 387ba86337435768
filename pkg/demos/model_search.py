"""Proxy-model search for one theory with its index held fixed.

Given the index, the proxy regression has a closed-form evidence, so the
posterior over the seven non-empty models of three proxies can be listed
exactly and compared with the visit frequencies of the model-move chain.

    python3 demos/model_search.py
"""
import itertools

import numpy as np

from bta.engine import initial_state
from bta.latent import cbf_model_step, model_log_target
from bta.model import Dataset, Family, ModelSpec, Outcome, Theory


def main(sweeps=50_000):
    rng = np.random.default_rng(2)
    n = 40
    X = rng.normal(size=(n, 3))
    X[:, 2] = 0.8 * X[:, 0] + 0.6 * X[:, 2]  # correlated with the first proxy
    spec = ModelSpec((Theory("T", ("x1", "x2", "x3")),), (Outcome("y", Family.LOGISTIC),))
    data = Dataset([X], np.zeros((n, 1)), np.zeros((n, 1), bool))
    state = initial_state(spec, data)
    state.index[:, 0] = X @ [0.7, 0.0, 0.0] + rng.normal(size=n)

    models = [np.array(b, bool) for b in itertools.product([0, 1], repeat=3) if any(b)]
    logp = np.array([model_log_target(data, 0, m, state.index[:, 0], 1.0) for m in models])
    exact = np.exp(logp - logp.max())
    exact /= exact.sum()

    visits = dict.fromkeys((tuple(m) for m in models), 0)
    for _ in range(sweeps):
        cbf_model_step(state, data, 0, rng)
        visits[tuple(state.models[0])] += 1
    print("model        exact    chain")
    for m, p in zip(models, exact):
        name = "+".join(f"x{j + 1}" for j in np.flatnonzero(m))
        print(f"{name:<10} {p:7.4f}  {visits[tuple(m)] / sweeps:7.4f}")


if __name__ == "__main__":
    main()
