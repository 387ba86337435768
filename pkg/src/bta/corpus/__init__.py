"""Synthetic sovereign-risk-shaped example corpus.

Same shape as the sovereign-risk panel the method was built for (1998
country/year rows, 25 proxies in five theories, four outcomes with the
unemployment and devaluation series only partly observed) but with simulated
values, since the original data cannot be redistributed.  ``build`` regenerates
the packaged files exactly.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from ..data_io import SpecFile, parse_spec, read_panel, read_spec, save_panel, simulate_arrays

SEED = 20190101
N_COUNTRIES, FIRST_YEAR, N_YEARS = 74, 1983, 27  # 74 * 27 = 1998 rows

THEORIES = {
    "Insolvency": ["MAC", "IMF", "CAY", "ResG", "XG", "WX", "TEDX", "MG", "FDIY", "FDIG",
                   "TEDY", "SEDY", "PEDY", "OPEN"],
    "Illiquidity": ["STDR", "M2R", "DSER"],
    "Macroeconomic": ["DOil", "RGRWT", "OVER", "UST"],
    "Political": ["PR", "History"],
    "Systemic": ["Cont_tot", "Cont_area"],
}

SPEC = {
    "theories": [{"name": k, "proxies": v, "nu": 1.0} for k, v in THEORIES.items()],
    "outcomes": [
        {"name": "Default", "family": "logistic"},
        {"name": "Inflation", "family": "quantile", "tau": 0.9},
        {"name": "Unemployment", "family": "quantile", "tau": 0.9},
        {"name": "Devaluation", "family": "gev"},
    ],
    "labels": ["country", "year"],
    "group": "year",
    "run": {"iterations": 20000, "burn_in": 5000, "thin": 5, "chains": 4, "seed": 1},
}

TRUTH = {
    "theories": {
        "Insolvency": {"beta": {"CAY": -0.6, "ResG": -0.4, "WX": -0.5, "MG": -0.4, "PEDY": 0.5}},
        "Illiquidity": {"beta": {"STDR": 0.6, "DSER": 0.4}},
        "Macroeconomic": {"beta": {"RGRWT": -0.5, "OVER": 0.4}},
        "Political": {"beta": {"PR": 0.5, "History": 0.7}},
        "Systemic": {"beta": {"Cont_tot": 0.4, "Cont_area": 0.5}},
    },
    "gamma": {
        "Default": {"Insolvency": 1.0, "Illiquidity": 1.0, "Macroeconomic": 1.0, "Political": 1.0, "Systemic": 1.0},
        "Inflation": {"Political": 1.9},
        "Unemployment": {"Illiquidity": 2.3, "Macroeconomic": -0.5, "Political": -0.85},
    },
    "alpha": {"Default": -4.0, "Inflation": 8.0, "Unemployment": 7.0, "Devaluation": 0.03},
    "kappa": {"Inflation": 0.0, "Unemployment": 0.5, "Devaluation": 3.5},
    "xi": {"Devaluation": 0.2},
    "present_count": {"Unemployment": 897, "Devaluation": 272},
}


def labels() -> dict[str, np.ndarray]:
    country = [f"Country {c + 1:02d}" for c in range(N_COUNTRIES) for _ in range(N_YEARS)]
    year = [str(FIRST_YEAR + y) for _ in range(N_COUNTRIES) for y in range(N_YEARS)]
    return {"country": np.array(country), "year": np.array(year)}


def generate(seed: int = SEED):
    """Return ``(SpecFile, Dataset, realised truth)`` for the corpus."""
    sf = parse_spec(SPEC)
    rng = np.random.Generator(np.random.PCG64(seed))
    data, realised = simulate_arrays(sf.model, TRUTH, N_COUNTRIES * N_YEARS, rng, labels())
    return sf, data, realised


def build(directory, seed: int = SEED) -> Path:
    """Write ``spec.json``, ``truth.json`` and ``panel.csv`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    sf, data, realised = generate(seed)
    (directory / "spec.json").write_text(json.dumps(SPEC, indent=2) + "\n")
    realised.pop("index")
    realised.pop("scale_free_index")
    (directory / "truth.json").write_text(json.dumps({"seed": seed, "parameters": TRUTH, "realised": realised},
                                                     indent=2, sort_keys=True) + "\n")
    save_panel(directory / "panel.csv", sf.model, data)
    return directory


def path() -> Path:
    """Directory of the packaged corpus files."""
    return Path(str(resources.files(__package__) / "sri_shaped"))


def load() -> tuple[SpecFile, object]:
    """Read the packaged corpus: ``(SpecFile, Dataset)``."""
    sf = read_spec(path() / "spec.json")
    return sf, read_panel(path() / "panel.csv", sf)
