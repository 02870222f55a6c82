"""Versioned JSON cache of spectrum records.

A file holds a metadata header, a SHA-256 digest of the payload and the
blocks. Loading re-checks the eigen-residuals of a deterministic 1% sample
of blocks against freshly assembled matrices; any failure is a miss.
"""

import hashlib
import json
import logging
import math
import os
from pathlib import Path

import numpy as np

from ..spectral import RESIDUAL_TOL, SpectrumBlock, SpectrumRecord
from ..symbols import parse_symbol
from ..toeplitz import assemble_block

log = logging.getLogger(__name__)

CACHE_VERSION = "1"
SAMPLE_FRACTION = 0.01


def cache_dir():
    """``$TWL_CACHE_DIR`` or ``~/.cache/twl``."""
    return Path(os.environ.get("TWL_CACHE_DIR") or Path.home() / ".cache" / "twl")


def cache_key(symbol_text, weights, d, k_max, isotypes=None):
    """SHA-256 of ``(symbol text, weights, d, k_max)`` (isotype filter
    appended when present)."""
    parts = [symbol_text, None if weights is None else list(weights), int(d), int(k_max)]
    if isotypes is not None:
        parts.append(sorted(int(v) for v in isotypes))
    return hashlib.sha256(json.dumps(parts).encode()).hexdigest()


def _record_key(record):
    return cache_key(record.symbol_text, record.weights, record.d, record.k_max, record.isotypes)


def _block_to_json(b):
    groups = []
    for rows, vecs in b.groups:
        g = {"rows": [int(r) for r in rows]}
        if vecs is not None:
            g["vecs_re"] = vecs.real.tolist()
            g["vecs_im"] = vecs.imag.tolist()
        groups.append(g)
    return {"k": b.k, "eigenvalues": b.eigenvalues.tolist(), "varpi": b.varpi.tolist(),
            "residual": b.residual, "groups": groups}


def _block_from_json(obj):
    groups = []
    for g in obj["groups"]:
        rows = np.asarray(g["rows"], dtype=np.int64)
        vecs = None
        if "vecs_re" in g:
            vecs = np.asarray(g["vecs_re"]) + 1j * np.asarray(g["vecs_im"])
            vecs = vecs.reshape(len(rows), -1)
        groups.append((rows, vecs))
    return SpectrumBlock(
        k=int(obj["k"]), eigenvalues=np.asarray(obj["eigenvalues"], dtype=float),
        varpi=np.asarray(obj["varpi"], dtype=np.int64), groups=tuple(groups),
        residual=float(obj["residual"]),
    )


def _digest(payload):
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def cache_path(record_or_key, directory=None):
    key = record_or_key if isinstance(record_or_key, str) else _record_key(record_or_key)
    return Path(directory or cache_dir()) / f"spectrum-{key}.json"


def cache_store(record, directory=None):
    """Write ``record``; returns the file path."""
    meta = {
        "symbol_text": record.symbol_text, "d": record.d,
        "weights": None if record.weights is None else list(record.weights),
        "k_max": record.k_max, "f_min": record.f_min, "f_max": record.f_max,
        "isotypes": None if record.isotypes is None else list(record.isotypes),
        "residual_bound": record.residual_bound,
    }
    payload = {"metadata": meta, "blocks": [_block_to_json(b) for b in record.blocks]}
    doc = {"version": CACHE_VERSION, "key": _record_key(record), "digest": _digest(payload), **payload}
    path = cache_path(record, directory)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)
    return path


def _verify_sample(record):
    f = parse_symbol(record.symbol_text, d=record.d)
    n = max(1, int(math.ceil(SAMPLE_FRACTION * len(record.blocks))))
    seed = int(_record_key(record)[:8], 16)
    picks = np.random.default_rng(seed).choice(len(record.blocks), size=n, replace=False)
    for i in picks:
        b = record.blocks[i]
        start = 0
        for rows, vecs in b.groups:
            m = len(rows)
            lam = b.eigenvalues[start:start + m]
            start += m
            tb = assemble_block(f, b.k, indices=rows)
            mat = tb.matrix
            v = np.eye(m) if vecs is None else vecs
            norm = max(float(np.max(np.abs(np.linalg.eigvalsh(mat)))) if m else 0.0, 1e-300)
            res = float(np.max(np.linalg.norm(mat @ v - v * lam, axis=0))) / norm if m else 0.0
            if not res <= RESIDUAL_TOL:
                return False, f"block k={b.k} residual {res:.2e}"
    return True, ""


def cache_load(key, directory=None):
    """Return the cached :class:`SpectrumRecord` for ``key`` or ``None``."""
    path = cache_path(key, directory)
    if not path.exists():
        return None
    try:
        doc = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        log.warning("cache file %s is corrupt (%s); recomputing", path, exc)
        return None
    if doc.get("version") != CACHE_VERSION:
        log.warning("cache file %s has version %r, expected %r; recomputing",
                    path, doc.get("version"), CACHE_VERSION)
        return None
    try:
        payload = {"metadata": doc["metadata"], "blocks": doc["blocks"]}
        if doc.get("digest") != _digest(payload):
            log.warning("cache file %s fails its digest; recomputing", path)
            return None
        meta = doc["metadata"]
        record = SpectrumRecord(
            symbol_text=meta["symbol_text"], d=int(meta["d"]),
            weights=None if meta["weights"] is None else tuple(meta["weights"]),
            k_max=int(meta["k_max"]), f_min=float(meta["f_min"]), f_max=float(meta["f_max"]),
            blocks=tuple(_block_from_json(b) for b in doc["blocks"]),
            isotypes=None if meta["isotypes"] is None else tuple(meta["isotypes"]),
            residual_bound=float(meta["residual_bound"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        log.warning("cache file %s is malformed (%s); recomputing", path, exc)
        return None
    ok, why = _verify_sample(record)
    if not ok:
        log.warning("cache file %s failed residual re-verification (%s); recomputing", path, why)
        return None
    return record
