"""Experiment runners behind the command line subcommands.

Every runner takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding :class:`ResultRow` rows, summary metadata
and a pass flag judged against ``check.tolerance``.

CSV columns, in order: ``experiment, lambda, varpi, measured, predicted,
ratio, trunc_error``. Empty cells mean "not applicable".
"""

from dataclasses import dataclass, field
import csv
import io
import json
import logging
import math
from pathlib import Path

import numpy as np

from ..asymptotics import (
    hessian_suite,
    predicted_counting,
    predicted_kernel_diag,
    predicted_trace,
    weyl_parameters,
)
from ..dynamics import fiber_symbol, lie_identities_check, pullback_check
from ..exceptions import ConfigError, IncompleteSpectrumError
from ..geometry import AmbientPoint, random_point
from ..hardy import near_diagonal_szego_check
from ..spectral import compute_spectrum, counting, good_cutoff, smoothed_kernel, smoothed_trace
from ..symbols import parse_symbol
from ..symmetry import on_zero_locus, random_point_on_zero_locus
from .cache import cache_key, cache_load, cache_store
from .config import lambda_grid_bound

log = logging.getLogger(__name__)

CSV_COLUMNS = ("experiment", "lambda", "varpi", "measured", "predicted", "ratio", "trunc_error")
CONTACT_TOL = 1e-6


@dataclass(frozen=True)
class ResultRow:
    """One measurement; ``ratio = measured / predicted`` when both exist."""

    experiment: str
    lam: float = None
    varpi: int = None
    measured: float = None
    predicted: float = None
    trunc_error: float = None

    @property
    def ratio(self):
        if self.measured is None or self.predicted in (None, 0):
            return None
        return self.measured / self.predicted

    def cells(self):
        vals = (self.experiment, self.lam, self.varpi, self.measured, self.predicted,
                self.ratio, self.trunc_error)
        return [_fmt(v) for v in vals]


@dataclass
class ExperimentResult:
    experiment: str
    rows: list
    passed: bool
    summary: dict = field(default_factory=dict)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def _json_value(v):
    if isinstance(v, float) or isinstance(v, np.floating):
        return format(float(v), ".17g")
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [_json_value(v.real), _json_value(v.imag)]
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


# -- spectra ----------------------------------------------------------------


def _isotypes(cfg):
    if cfg.weights is None:
        return [None]
    return list(cfg.isotypes) if cfg.isotypes is not None else [0]


def get_spectrum(cfg, jobs=1, use_cache=True):
    """Spectrum for ``cfg``, served from the cache when the key matches."""
    key = cache_key(cfg.symbol, cfg.weights, cfg.d, cfg.k_max, cfg.isotypes)
    if use_cache:
        rec = cache_load(key)
        if rec is not None:
            log.info("spectrum cache hit %s", key[:12])
            return rec
    rec = compute_spectrum(cfg.symbol, cfg.weights, cfg.k_max, d=cfg.d, isotypes=cfg.isotypes,
                           jobs=jobs, backend=cfg.backend)
    if use_cache:
        try:
            cache_store(rec)
        except OSError as exc:
            log.warning("cannot write spectrum cache: %s", exc)
    return rec


def _within(ratios, tol):
    ratios = [r for r in ratios if r is not None]
    return bool(ratios) and all(abs(r - 1) <= tol for r in ratios)


def run_spectrum(cfg, jobs=1, use_cache=True):
    """Counting function of the computed spectrum on the lambda grid."""
    rec = get_spectrum(cfg, jobs, use_cache)
    lambda_grid_bound(cfg, rec.f_min)
    rows = [ResultRow("spectrum", float(lam), v, float(counting(rec, lam, v)))
            for v in _isotypes(cfg) for lam in cfg.lambdas]
    summary = {"blocks": len(rec.blocks), "eigenvalues": int(rec.eigenvalues.size),
               "f_min": rec.f_min, "f_max": rec.f_max, "residual_bound": rec.residual_bound}
    return ExperimentResult("spectrum", rows, True, summary)


def run_weyl(cfg, jobs=1, use_cache=True):
    """``N^(varpi)(lambda)`` against the leading Weyl term."""
    rec = get_spectrum(cfg, jobs, use_cache)
    lambda_grid_bound(cfg, rec.f_min)
    rows = []
    gammas = {}
    for v in _isotypes(cfg):
        params = weyl_parameters(cfg.symbol, cfg.weights, v or 0, d=cfg.d,
                                 rng=np.random.default_rng(cfg.seed))
        gammas[str(v)] = params.gamma
        for lam in cfg.lambdas:
            rows.append(ResultRow("weyl", float(lam), v, float(counting(rec, lam, v)),
                                  float(predicted_counting(params, lam))))
    passed = _within([r.ratio for r in rows], cfg.tolerance)
    return ExperimentResult("weyl", rows, passed, {"gamma": gammas})


def run_trace(cfg, jobs=1, use_cache=True):
    """Smoothed trace against its leading term; judged on the grid mean."""
    rec = get_spectrum(cfg, jobs, use_cache)
    cut = good_cutoff(cfg.epsilon)
    rows = []
    means = {}
    for v in _isotypes(cfg):
        params = weyl_parameters(cfg.symbol, cfg.weights, v or 0, d=cfg.d,
                                 rng=np.random.default_rng(cfg.seed))
        sub = []
        for lam in cfg.lambdas:
            val, err = smoothed_trace(rec, cut, lam, v, return_error=True)
            sub.append(ResultRow("trace", float(lam), v, val,
                                 float(predicted_trace(params, lam)), err))
        means[str(v)] = float(np.mean([r.ratio for r in sub]))
        rows.extend(sub)
    passed = all(abs(m - 1) <= cfg.tolerance for m in means.values())
    return ExperimentResult("trace", rows, passed,
                            {"mean_ratio": means, "lambda_tail": cut.lambda_tail})


def _base_point(cfg):
    if cfg.base_point is not None:
        return AmbientPoint.normalized(np.asarray(cfg.base_point, dtype=complex))
    return random_point_on_zero_locus(cfg.weights, np.random.default_rng(cfg.seed))


def run_kernel(cfg, jobs=1, use_cache=True):
    """Diagonal of the smoothed equivariant kernel at the base point."""
    if cfg.weights is None:
        raise ConfigError("action.weights", "the kernel experiment needs a circle action")
    x = _base_point(cfg)
    f = parse_symbol(cfg.symbol, d=cfg.d)
    # the completeness guard fires before any eigenproblem is solved
    cut = good_cutoff(cfg.epsilon)
    top = cfg.lambda_stop + cut.lambda_tail
    if top > cfg.k_max * f.min:
        need = int(math.ceil(top / f.min))
        raise IncompleteSpectrumError(
            f"kernel at lambda = {cfg.lambda_stop:g} needs eigenvalues up to {top:.6g}", need)
    rec = get_spectrum(cfg, jobs, use_cache)
    on = on_zero_locus(cfg.weights, x)
    rows = []
    for v in _isotypes(cfg):
        params = weyl_parameters(f, cfg.weights, v, rng=np.random.default_rng(cfg.seed))
        for lam in cfg.lambdas:
            val = smoothed_kernel(rec, cut, lam, v, x, x).real
            pred = float(predicted_kernel_diag(params, x, 0.0, lam, v)) if on else 0.0
            rows.append(ResultRow("kernel", float(lam), v, val, pred))
    passed = _within([r.ratio for r in rows], cfg.tolerance) if on else True
    summary = {"base_point": [[c.real, c.imag] for c in x.z], "on_zero_locus": on}
    return ExperimentResult("kernel", rows, passed, summary)


# -- property suites --------------------------------------------------------


def run_contact_check(cfg, jobs=1, use_cache=True):
    """Lie derivative identities and the pullback law at random points.

    Rows use ``lambda`` for the point index and ``measured`` for the largest
    residual at that point.
    """
    sym = fiber_symbol(cfg.symbol, cfg.d)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    worst = 0.0
    for i in range(cfg.points):
        x = random_point(cfg.d, rng)
        lie = lie_identities_check(sym, x, rng)
        pb = pullback_check(sym, x, cfg.tau, rng)
        res = max(lie.max_residual, pb.residual)
        worst = max(worst, res)
        rows.append(ResultRow("contact-check", float(i), None, res, None))
    return ExperimentResult("contact-check", rows, worst < CONTACT_TOL,
                            {"max_residual": worst, "tolerance": CONTACT_TOL})


def run_hessian_check(cfg, jobs=1, use_cache=True):
    """The three Hessian lemma suites; one row per suite with its worst
    relative error."""
    suite = hessian_suite(cfg.instances, cfg.seed)
    rows = []
    summary = {}
    passed = True
    for name, reports in suite.items():
        worst = max(max(r.det_rel_error, r.inverse_error) for r in reports)
        n_pass = sum(r.passed for r in reports)
        passed = passed and n_pass == len(reports)
        rows.append(ResultRow(f"hessian-check:{name}", None, None, worst, None))
        summary[name] = {"instances": len(reports), "passed": n_pass, "max_error": worst}
    return ExperimentResult("hessian-check", rows, passed, summary)


def run_szego_check(cfg, jobs=1, use_cache=True):
    """Scaled degree ``k`` Szego kernel against the universal Gaussian on a
    grid of chart displacements ``|u|, |v| <= 1``; ``lambda`` holds ``k``."""
    rng = np.random.default_rng(cfg.seed)
    x = _base_point(cfg) if cfg.weights is not None or cfg.base_point is not None \
        else random_point(cfg.d, rng)
    k = cfg.k
    rows = []
    radii = np.linspace(0.0, 1.0, 5)
    for ru in radii:
        for rv in radii:
            du = rng.normal(size=cfg.d) + 1j * rng.normal(size=cfg.d)
            dv = rng.normal(size=cfg.d) + 1j * rng.normal(size=cfg.d)
            u = ru * du / np.linalg.norm(du)
            v = rv * dv / np.linalg.norm(dv)
            meas, pred = near_diagonal_szego_check(k, x, u, v)
            rows.append(ResultRow("szego-check", float(k), None, abs(meas), abs(pred)))
    return ExperimentResult("szego-check", rows, _within([r.ratio for r in rows], cfg.tolerance))


RUNNERS = {
    "spectrum": run_spectrum,
    "weyl": run_weyl,
    "trace": run_trace,
    "kernel": run_kernel,
    "contact-check": run_contact_check,
    "hessian-check": run_hessian_check,
    "szego-check": run_szego_check,
}


def run(name, cfg, jobs=1, use_cache=True):
    """Run the experiment ``name`` on ``cfg``."""
    if name not in RUNNERS:
        raise ConfigError("experiment", f"unknown experiment {name!r}")
    return RUNNERS[name](cfg, jobs=jobs, use_cache=use_cache)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def summary_json(result, cfg):
    doc = {
        "experiment": result.experiment,
        "passed": result.passed,
        "config": cfg.to_dict(),
        "columns": list(CSV_COLUMNS),
        "rows": [dict(zip(CSV_COLUMNS, r.cells())) for r in result.rows],
        "summary": result.summary,
    }
    return json.dumps(_json_value(doc), indent=2, sort_keys=True) + "\n"


def write_result(result, cfg, out_dir):
    """Write ``<experiment>.csv`` and ``<experiment>.json`` to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.experiment}.csv"
    json_path = out / f"{result.experiment}.json"
    csv_path.write_text(rows_to_csv(result.rows))
    json_path.write_text(summary_json(result, cfg))
    return csv_path, json_path
