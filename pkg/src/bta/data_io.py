"""Spec and panel files, synthetic data, and result export.

Panel CSV rules: a header row is required; ``NA`` (exact, unquoted) marks a
missing outcome and is the only missing-value token; blank cells are errors;
proxies are never missing.  Numbers are written with ``repr`` (the shortest
string that round-trips), so ``load(save_panel(...))`` is bit-exact.
"""
from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import ChainSamples, PosteriorSummary
from .errors import DataError, ShapeTooSmall
from .families import XI_MIN
from .model import Dataset, Family, ModelSpec, Outcome, Theory

NA = "NA"


# -- spec files ------------------------------------------------------------------

@dataclass
class SpecFile:
    model: ModelSpec
    labels: tuple[str, ...] | None = None
    group: str | None = None
    run: dict = field(default_factory=dict)


_RUN_KEYS = {"iterations", "burn_in", "thin", "chains", "seed"}


def parse_spec(doc: dict, path=None) -> SpecFile:
    try:
        theories = tuple(Theory(t["name"], tuple(t["proxies"]), float(t.get("nu", 1.0)))
                         for t in doc["theories"])
        outcomes = []
        for o in doc["outcomes"]:
            fam = Family(str(o["family"]).lower())
            tau = o.get("tau", 0.9 if fam is Family.QUANTILE else None)
            outcomes.append(Outcome(o["name"], fam, None if tau is None else float(tau), o.get("column")))
        model = ModelSpec(theories, tuple(outcomes))
    except KeyError as exc:
        raise DataError(f"spec is missing required key {exc.args[0]!r}", path=path) from None
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid spec: {exc}", path=path) from None
    columns = [p for th in model.theories for p in th.proxies] + [o.column for o in model.outcomes]
    if len(set(columns)) != len(columns):
        raise DataError("a column is referenced more than once in the spec file", path=path)
    run = dict(doc.get("run", {}))
    unknown = set(run) - _RUN_KEYS
    if unknown:
        raise DataError(f"unknown run settings {sorted(unknown)}", path=path)
    labels = doc.get("labels")
    return SpecFile(model, None if labels is None else tuple(labels), doc.get("group"), run)


def read_spec(path) -> SpecFile:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataError(f"cannot read spec: {exc.strerror}", path=path) from None
    except json.JSONDecodeError as exc:
        raise DataError(f"spec is not valid JSON: {exc.msg}", row=exc.lineno, path=path) from None
    return parse_spec(doc, path)


def spec_document(spec: SpecFile) -> dict:
    doc = {
        "theories": [{"name": t.name, "proxies": list(t.proxies), "nu": t.nu} for t in spec.model.theories],
        "outcomes": [{"name": o.name, "column": o.column, "family": o.family.value,
                      **({"tau": o.tau} if o.tau is not None else {})} for o in spec.model.outcomes],
    }
    if spec.labels is not None:
        doc["labels"] = list(spec.labels)
    if spec.group is not None:
        doc["group"] = spec.group
    if spec.run:
        doc["run"] = dict(spec.run)
    return doc


def write_spec(path, spec: SpecFile) -> Path:
    path = Path(path)
    path.write_text(json.dumps(spec_document(spec), indent=2) + "\n")
    return path


# -- panels ----------------------------------------------------------------------

def _number(cell: str, line: int, column: str, path) -> float:
    if cell == "":
        raise DataError("blank cell (use NA for a missing outcome)", row=line, column=column, path=path)
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"non-numeric value {cell!r}", row=line, column=column, path=path) from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {cell!r}", row=line, column=column, path=path)
    return value


def read_panel(path, spec: SpecFile) -> Dataset:
    """Parse a panel CSV against ``spec``.  ``row`` in errors is the file line."""
    model = spec.model
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read panel: {exc.strerror}", path=path) from None
    if not rows:
        raise DataError("panel is empty; a header row is required", path=path)
    header = rows[0]
    pos = {name: j for j, name in enumerate(header)}
    if len(pos) != len(header):
        raise DataError("duplicate column names in header", row=1, path=path)
    proxies = [p for th in model.theories for p in th.proxies]
    needed = proxies + [o.column for o in model.outcomes]
    label_cols = list(spec.labels) if spec.labels is not None else [c for c in header if c not in set(needed)]
    for col in needed + label_cols:
        if col not in pos:
            raise DataError("missing column", column=col, path=path)
    body = rows[1:]
    n = len(body)
    Xall = np.zeros((n, len(proxies)))
    Y = np.zeros((n, model.R))
    mask = np.ones((n, model.R), dtype=bool)
    labels = {c: [] for c in label_cols}
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, found {len(row)}", row=line, path=path)
        for j, col in enumerate(proxies):
            cell = row[pos[col]]
            if cell == NA:
                raise DataError("NA in proxy column (proxies cannot be missing)", row=line, column=col, path=path)
            Xall[i, j] = _number(cell, line, col, path)
        for r, out in enumerate(model.outcomes):
            cell = row[pos[out.column]]
            if cell == NA:
                mask[i, r] = False
                continue
            y = _number(cell, line, out.column, path)
            if out.family is Family.LOGISTIC and y not in (0.0, 1.0):
                raise DataError(f"logistic outcome value {cell!r} is not 0 or 1", row=line, column=out.column, path=path)
            Y[i, r] = y
        for c in label_cols:
            labels[c].append(row[pos[c]])
    X, start = [], 0
    for th in model.theories:
        X.append(Xall[:, start:start + th.p])
        start += th.p
    return Dataset(X, Y, mask, labels={c: np.array(v, dtype=str) for c, v in labels.items()} or None)


def load(panel, spec) -> tuple[ModelSpec, Dataset]:
    """Read a panel and its spec file (path or :class:`SpecFile`)."""
    sf = spec if isinstance(spec, SpecFile) else read_spec(spec)
    return sf.model, read_panel(panel, sf)


def _fmt(x: float) -> str:
    return NA if not math.isfinite(x) else repr(float(x))


def save_panel(path, spec: ModelSpec, data: Dataset) -> Path:
    """Write ``data`` as a panel CSV: label columns, proxies, then outcomes."""
    path = Path(path)
    labels = data.labels or {}
    header = list(labels) + [p for th in spec.theories for p in th.proxies] + [o.column for o in spec.outcomes]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(data.n):
            row = [str(labels[c][i]) for c in labels]
            for t in range(spec.T):
                row += [repr(float(v)) for v in data.X[t][i]]
            row += [repr(float(data.Y[i, r])) if data.mask[i, r] else NA for r in range(spec.R)]
            w.writerow(row)
    return path


# -- simulation ------------------------------------------------------------------

def _ald_draw(u: np.ndarray, kappa: float, tau: float) -> np.ndarray:
    """Inverse CDF of the asymmetric Laplace with location 0."""
    sigma = math.exp(-kappa)
    low = u < tau
    z = np.empty_like(u)
    z[low] = sigma * np.log(u[low] / tau) / (1.0 - tau)
    z[~low] = -sigma * np.log((1.0 - u[~low]) / (1.0 - tau)) / tau
    return z


def _gev_draw(u: np.ndarray, kappa: float, xi: float) -> np.ndarray:
    return math.exp(-kappa) * ((-np.log(u)) ** (-xi) - 1.0) / xi


def simulate_arrays(spec: ModelSpec, truth: dict, n: int, rng: np.random.Generator,
                    labels: dict | None = None) -> tuple[Dataset, dict]:
    """Draw ``X ~ N(0,1)``, indices from the index model and outcomes from each family.

    ``truth`` keys: ``theories`` (``name -> {"beta": {proxy: value}, "nu": ...}``;
    proxies absent from ``beta`` are outside the true model), ``gamma``
    (``outcome -> {theory: value}``; absent means Zero), ``alpha``, ``kappa``,
    ``xi`` (per outcome) and optional ``present_count`` per outcome.
    Returns the dataset and the realised truth, including the indices.
    """
    T, R = spec.T, spec.R
    th_truth = truth.get("theories", {})
    betas, nus = [], np.empty(T)
    for t, th in enumerate(spec.theories):
        entry = th_truth.get(th.name, {})
        unknown = set(entry.get("beta", {})) - set(th.proxies)
        if unknown:
            raise DataError(f"truth names unknown proxies {sorted(unknown)} for theory {th.name!r}")
        betas.append(np.array([float(entry.get("beta", {}).get(p, 0.0)) for p in th.proxies]))
        nus[t] = float(entry.get("nu", th.nu))
    gamma = np.zeros((R, T))
    for r, out in enumerate(spec.outcomes):
        for t, th in enumerate(spec.theories):
            gamma[r, t] = float(truth.get("gamma", {}).get(out.name, {}).get(th.name, 0.0))
    alpha = np.array([float(truth.get("alpha", {}).get(o.name, 0.0)) for o in spec.outcomes])
    kappa = np.array([float(truth.get("kappa", {}).get(o.name, 0.0)) if o.has_kappa else math.nan
                      for o in spec.outcomes])
    xi = np.full(R, math.nan)
    for r, out in enumerate(spec.outcomes):
        if out.has_xi:
            if out.name not in truth.get("xi", {}):
                raise DataError(f"truth needs a GEV shape xi for outcome {out.name!r}")
            xi[r] = float(truth["xi"][out.name])
            if not math.isfinite(xi[r]) or abs(xi[r]) < XI_MIN:
                raise ShapeTooSmall(f"outcome {out.name!r}: |xi| must be at least {XI_MIN}; the GEV support is degenerate")
            if not math.isfinite(kappa[r]):
                raise DataError(f"outcome {out.name!r}: GEV kappa must be finite")

    X = [rng.standard_normal((n, th.p)) for th in spec.theories]
    eps = rng.standard_normal((n, T))
    index = np.column_stack([X[t] @ betas[t] + eps[:, t] / math.sqrt(nus[t]) for t in range(T)]) if n else np.zeros((0, T))
    mu = alpha + index @ gamma.T
    Y = np.zeros((n, R))
    for r, out in enumerate(spec.outcomes):
        u = rng.random(n)
        if out.family is Family.LOGISTIC:
            Y[:, r] = (u < 1.0 / (1.0 + np.exp(-mu[:, r]))).astype(float)
        elif out.family is Family.QUANTILE:
            Y[:, r] = mu[:, r] + _ald_draw(u, kappa[r], out.tau)
        else:
            Y[:, r] = mu[:, r] + _gev_draw(u, kappa[r], xi[r])
    mask = np.ones((n, R), dtype=bool)
    for r, out in enumerate(spec.outcomes):
        k = truth.get("present_count", {}).get(out.name)
        if k is not None:
            if not 0 <= int(k) <= n:
                raise DataError(f"present_count for {out.name!r} must lie in [0, {n}]")
            keep = rng.choice(n, size=int(k), replace=False)
            mask[:, r] = False
            mask[keep, r] = True
    data = Dataset(X, Y, mask, labels=labels)
    realised = {
        "theories": {th.name: {"beta": dict(zip(th.proxies, betas[t].tolist())), "nu": nus[t],
                               "model": [p for p, b in zip(th.proxies, betas[t]) if b != 0]}
                     for t, th in enumerate(spec.theories)},
        "gamma": {o.name: {th.name: gamma[r, t] for t, th in enumerate(spec.theories) if gamma[r, t] != 0}
                  for r, o in enumerate(spec.outcomes)},
        "alpha": {o.name: alpha[r] for r, o in enumerate(spec.outcomes)},
        "kappa": {o.name: kappa[r] for r, o in enumerate(spec.outcomes) if o.has_kappa},
        "xi": {o.name: xi[r] for r, o in enumerate(spec.outcomes) if o.has_xi},
        "present_count": {o.name: int(mask[:, r].sum()) for r, o in enumerate(spec.outcomes)},
        "index": index.tolist(),
        "scale_free_index": (index * nus).tolist(),
    }
    return data, realised


def simulate(spec_path, truth_path, n: int, seed: int, out_path) -> tuple[Path, Path]:
    """Write a synthetic panel to ``out_path`` and the realised truth next to it
    (``<stem>.truth.json``)."""
    sf = read_spec(spec_path)
    try:
        truth = json.loads(Path(truth_path).read_text())
    except OSError as exc:
        raise DataError(f"cannot read truth file: {exc.strerror}", path=truth_path) from None
    except json.JSONDecodeError as exc:
        raise DataError(f"truth file is not valid JSON: {exc.msg}", row=exc.lineno, path=truth_path) from None
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = {"obs": np.array([str(i + 1) for i in range(n)])}
    data, realised = simulate_arrays(sf.model, truth, n, rng, labels)
    realised["seed"] = seed
    realised["n"] = n
    out_path = Path(out_path)
    save_panel(out_path, sf.model, data)
    truth_out = out_path.with_suffix(".truth.json")
    truth_out.write_text(json.dumps(realised, sort_keys=True) + "\n")
    return out_path, truth_out


# -- export ----------------------------------------------------------------------

def display(x: float, decimals: int = 3) -> str:
    """Table-style number: rounded, trailing zeros dropped, ``NA`` for NaN."""
    if not math.isfinite(x):
        return NA
    s = f"{round(x, decimals):.{decimals}f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "theory"


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _table(path: Path, corner: str, row_names, col_names, matrix, decimals: int | None) -> Path:
    fmt = _fmt if decimals is None else (lambda v: display(v, decimals))
    rows = [[name, *(fmt(float(v)) for v in matrix[i])] for i, name in enumerate(row_names)]
    return _write_csv(path, [corner, *col_names], rows)


def write_trace(path, chains: list[ChainSamples]) -> Path:
    """One row per stored record: statuses (0 Zero, 1 One, 2 Free), loadings,
    outcome globals, ``nu`` and proxy inclusion/coefficients."""
    first = chains[0]
    header = ["chain", "iteration"]
    for o in first.outcome_names:
        header += [f"status:{o}:{t}" for t in first.theory_names]
    for o in first.outcome_names:
        header += [f"gamma:{o}:{t}" for t in first.theory_names]
    header += [f"{k}:{o}" for k in ("alpha", "kappa", "xi") for o in first.outcome_names]
    header += [f"nu:{t}" for t in first.theory_names]
    for t, name in enumerate(first.theory_names):
        header += [f"in:{name}:{p}" for p in first.proxy_names[t]]
    for t, name in enumerate(first.theory_names):
        header += [f"beta:{name}:{p}" for p in first.proxy_names[t]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for c in chains:
            for k in range(len(c)):
                row = [str(c.chain), str(int(c.iteration[k]))]
                row += [str(int(s)) for s in c.status[k].ravel()]
                row += [_fmt(v) for v in c.gamma[k].ravel()]
                row += [_fmt(v) for arr in (c.alpha, c.kappa, c.xi) for v in arr[k]]
                row += [_fmt(v) for v in c.nu[k]]
                for m in c.models:
                    row += [str(int(b)) for b in m[k]]
                for b in c.beta:
                    row += [_fmt(v) for v in b[k]]
                w.writerow(row)
    return Path(path)


def _observation_keys(summary: PosteriorSummary, n: int):
    if summary.labels:
        names = list(summary.labels)
        return names, [[str(summary.labels[c][i]) for c in names] for i in range(n)]
    return ["obs"], [[str(i + 1)] for i in range(n)]


def export(summary: PosteriorSummary, chains: list[ChainSamples], out_dir, decimals: int = 3,
           extremes: int = 5) -> list[Path]:
    """Write every summary table (full precision plus ``*_display.csv`` rounded
    copies), the per-record trace and a JSON run report."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    th, oc = summary.theory_names, summary.outcome_names
    written = []
    for stem, matrix in (("theory_inclusion", summary.inclusion.T), ("gamma_conditional_means", summary.gamma_mean.T)):
        written.append(_table(out / f"{stem}.csv", "theory", th, oc, matrix, None))
        written.append(_table(out / f"{stem}_display.csv", "theory", th, oc, matrix, decimals))
    for t, name in enumerate(th):
        mat = np.column_stack([summary.proxy_inclusion[t], summary.proxy_mean[t]])
        for suffix, dec in (("", None), ("_display", decimals)):
            path = out / f"proxies_{safe_name(name)}{suffix}.csv"
            written.append(_table(path, "name", summary.proxy_names[t], ["probability", "conditional_mean"], mat, dec))
    n = summary.index_mean.shape[0]
    key_names, keys = _observation_keys(summary, n)
    written.append(_write_csv(out / "indices.csv", [*key_names, *th],
                              [[*keys[i], *(_fmt(v) for v in summary.index_mean[i])] for i in range(n)]))
    for suffix, dec in (("", None), ("_display", decimals)):
        written.append(_table(out / f"index_correlation{suffix}.csv", "theory", th, th, summary.index_corr, dec))
    if summary.group_means is not None:
        written.append(_table(out / "means_by_group.csv", summary.group_name, [str(g) for g in summary.groups],
                              th, summary.group_means, None))
    for t, name in enumerate(th):
        lo, hi = summary.index_extremes(t, extremes)
        rows = [[rank, *keys[i], _fmt(summary.index_mean[i, t])]
                for rank, i in (*(("lowest", i) for i in lo), *(("highest", i) for i in hi))]
        written.append(_write_csv(out / f"index_extremes_{safe_name(name)}.csv", ["rank", *key_names, name], rows))
    written.append(write_trace(out / "trace.csv", chains))
    acc_rows = [[str(c.chain), move, str(tried), str(took)] for c in chains for move, (tried, took) in c.acceptance.items()]
    written.append(_write_csv(out / "acceptance.csv", ["chain", "move", "attempted", "accepted"], acc_rows))
    report = {
        "n_samples": summary.n_samples,
        "chains": len(chains),
        "chain_agreement": summary.chain_agreement,
        "chain_inclusion": summary.chain_inclusion.tolist(),
        "theories": list(th),
        "outcomes": list(oc),
    }
    path = out / "run_report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written
