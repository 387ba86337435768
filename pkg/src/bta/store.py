"""On-disk sample store: one binary file per chain.

Layout of ``chain_XXX.bta``::

    b"BTASTORE" | uint32 version | uint64 header length | JSON header | arrays

The header (sorted-key JSON, no timestamps) names every array with its dtype
and shape; array payloads follow in header order as little-endian raw bytes.
Identical chains therefore produce byte-identical files.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .engine import ChainSamples

MAGIC = b"BTASTORE"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


def _arrays(s: ChainSamples) -> list[tuple[str, np.ndarray]]:
    out = [("iteration", s.iteration)]
    out += [(f"models/{t}", m) for t, m in enumerate(s.models)]
    out += [(f"beta/{t}", b) for t, b in enumerate(s.beta)]
    out += [("status", s.status), ("gamma", s.gamma), ("alpha", s.alpha), ("kappa", s.kappa),
            ("xi", s.xi), ("nu", s.nu), ("index_sum", s.index_sum),
            ("index_pooled_sum", s.index_pooled_sum), ("index_pooled_cross", s.index_pooled_cross)]
    if s.index is not None:
        out.append(("index", s.index))
    return out


def _jsonable_labels(labels):
    if labels is None:
        return None
    return {k: np.asarray(v).tolist() for k, v in sorted(labels.items())}


def write_chain(path, samples: ChainSamples) -> Path:
    path = Path(path)
    arrays = _arrays(samples)
    header = {
        "theory_names": list(samples.theory_names),
        "outcome_names": list(samples.outcome_names),
        "proxy_names": [list(p) for p in samples.proxy_names],
        "chain": samples.chain,
        "seed": samples.seed,
        "labels": _jsonable_labels(samples.labels),
        "acceptance": {k: list(v) for k, v in samples.acceptance.items()},
        "arrays": [{"name": name, "dtype": np.asarray(a).dtype.newbyteorder("<").str, "shape": list(np.shape(a))}
                   for name, a in arrays],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    try:
        with open(path, "wb") as fh:
            fh.write(_PREFIX.pack(MAGIC, VERSION, len(blob)))
            fh.write(blob)
            for (_, a), meta in zip(arrays, header["arrays"]):
                fh.write(np.ascontiguousarray(a, dtype=meta["dtype"]).tobytes())
    except OSError as exc:
        raise OSError(f"cannot write sample store {path}: {exc.strerror}") from exc
    return path


def read_chain(path) -> ChainSamples:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _PREFIX.size:
        raise ValueError(f"{path}: truncated sample store")
    magic, version, hlen = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a sample store")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported store version {version}")
    header = json.loads(raw[_PREFIX.size:_PREFIX.size + hlen])
    pos = _PREFIX.size + hlen
    arrays = {}
    for meta in header["arrays"]:
        dt = np.dtype(meta["dtype"])
        count = int(np.prod(meta["shape"], dtype=np.int64))
        nbytes = count * dt.itemsize
        if pos + nbytes > len(raw):
            raise ValueError(f"{path}: truncated array {meta['name']!r}")
        arrays[meta["name"]] = np.frombuffer(raw, dt, count, pos).reshape(meta["shape"]).astype(dt.newbyteorder("="))
        pos += nbytes
    T = len(header["theory_names"])
    labels = header["labels"]
    return ChainSamples(
        theory_names=tuple(header["theory_names"]),
        outcome_names=tuple(header["outcome_names"]),
        proxy_names=tuple(tuple(p) for p in header["proxy_names"]),
        iteration=arrays["iteration"],
        models=[arrays[f"models/{t}"] for t in range(T)],
        beta=[arrays[f"beta/{t}"] for t in range(T)],
        status=arrays["status"],
        gamma=arrays["gamma"],
        alpha=arrays["alpha"],
        kappa=arrays["kappa"],
        xi=arrays["xi"],
        nu=arrays["nu"],
        index=arrays.get("index"),
        index_sum=arrays["index_sum"],
        index_pooled_sum=arrays["index_pooled_sum"],
        index_pooled_cross=arrays["index_pooled_cross"],
        chain=header["chain"],
        seed=header["seed"],
        labels=None if labels is None else {k: np.asarray(v) for k, v in labels.items()},
        acceptance={k: tuple(v) for k, v in header["acceptance"].items()},
    )


def chain_path(directory, chain: int) -> Path:
    return Path(directory) / f"chain_{chain:03d}.bta"


def write_store(directory, chains: list[ChainSamples]) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return [write_chain(chain_path(directory, c.chain), c) for c in chains]


def read_store(directory) -> list[ChainSamples]:
    files = sorted(Path(directory).glob("chain_*.bta"))
    if not files:
        raise FileNotFoundError(f"no chain_*.bta files in {directory}")
    return [read_chain(f) for f in files]
