"""Spectra of Toeplitz operators, counting functions and smoothed traces.

The spectrum of ``T`` on ``H(X)`` is the union over ``k`` of the spectra of
the blocks ``T_k``; with a circle action every block splits further into
weight (isotype) sub-blocks. Spectral sums weighted by a good cutoff
``chi-hat`` converge rapidly and are truncated with a certified bound.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import logging
import math

import numpy as np
from scipy import fft as sp_fft
from scipy.interpolate import CubicSpline
from scipy.special import gammaln
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import EigensolverError, IncompleteSpectrumError, PreconditionError
from .hardy import evaluate_sections, monomial_norms
from .symbols import SymbolFunction, parse_symbol
from .symmetry import CircleActionSpec, check_symbol_invariance, monomial_weights
from .toeplitz import assemble_block

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
TAIL_TOL = 1e-12
DEFAULT_EPSILON = 0.5
_N_T = 400


# -- good cutoffs -----------------------------------------------------------


def _bump(u):
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def _chi_raw(eps, t):
    """``int gamma(u) gamma(t - u) du`` by Gauss-Legendre on the overlap."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a = eps / 2
    c = _gamma_normalizer(eps)
    x, w = np.polynomial.legendre.leggauss(200)
    out = np.zeros_like(t)
    for i, ti in enumerate(t):
        lo, hi = max(-a, ti - a), min(a, ti + a)
        if hi <= lo:
            continue
        u = lo + (hi - lo) * (x + 1) / 2
        out[i] = (hi - lo) / 2 * np.sum(w * _bump(u / a) * _bump((ti - u) / a)) * c * c
    return out


@lru_cache(maxsize=8)
def _gamma_normalizer(eps):
    a = eps / 2
    dt = eps / _N_T
    g = _bump((-a + dt * np.arange(_N_T + 1)) / a)
    return 1.0 / math.sqrt(dt * np.sum(g * g))


@dataclass(frozen=True, eq=False)
class GoodCutoff:
    """A good ``epsilon``-cutoff ``chi = gamma * gamma``.

    ``gamma`` is the standard bump on ``(-epsilon/2, epsilon/2)``,
    normalized in ``L^2``; ``chi-hat = gamma-hat^2`` is tabulated on a
    uniform grid of spacing ``epsilon/400`` and interpolated through a cubic
    spline of ``gamma-hat``, so interpolated values stay nonnegative.
    """

    epsilon: float
    s_grid: np.ndarray = field(repr=False)
    chi_hat_grid: np.ndarray = field(repr=False)
    lambda_tail: float
    scale: float = field(repr=False)
    _gamma_hat: object = field(repr=False)
    _chi_hat_int: object = field(repr=False)

    def chi(self, t):
        """``chi(t)``, normalized so that ``chi(0) = 1``."""
        return _chi_raw(self.epsilon, t) * self.scale

    def chi_hat(self, s):
        """``chi-hat(s) = int chi(t) e^{-i s t} dt``; zero beyond the grid."""
        s = np.abs(np.asarray(s, dtype=float))
        inside = s <= self.s_grid[-1]
        g = np.where(inside, self._gamma_hat(np.where(inside, s, 0.0)), 0.0)
        return g * g

    def chi_hat_integral(self, s):
        """``int_{-inf}^s chi-hat``; tends to ``2 pi`` as ``s -> inf``."""
        s = np.asarray(s, dtype=float)
        a = np.minimum(np.abs(s), self.s_grid[-1])
        return self._chi_hat_int(self.s_grid[-1]) + np.sign(s) * self._chi_hat_int(a)

    @cached_property
    def _envelope(self):
        return np.maximum.accumulate(self.chi_hat_grid[::-1])[::-1]

    def tail_envelope(self, s):
        """``sup_{|t| >= |s|} chi-hat(t)`` from the grid (zero beyond it)."""
        s = np.abs(np.asarray(s, dtype=float))
        env = self._envelope
        i = np.searchsorted(self.s_grid, s)
        return np.where(i < len(env), env[np.minimum(i, len(env) - 1)], 0.0)


@lru_cache(maxsize=8)
def good_cutoff(epsilon=DEFAULT_EPSILON):
    """Construct the good cutoff for ``epsilon > 0``.

    ``gamma-hat`` is the trapezoid transform of ``gamma`` sampled with step
    ``epsilon/400``, evaluated on the ``s``-grid by a zero-padded real FFT.
    The trapezoid rule is spectrally accurate for the bump and the aliasing
    error is negligible on the retained range.
    """
    eps = float(epsilon)
    if not eps > 0:
        raise PreconditionError("epsilon must be positive")
    a = eps / 2
    dt = eps / _N_T
    t = -a + dt * np.arange(_N_T + 1)
    g = _bump(t / a) * _gamma_normalizer(eps)
    ds_target = eps / 400
    n = sp_fft.next_fast_len(int(math.ceil(2 * math.pi / (dt * ds_target))), real=True)
    ds = 2 * math.pi / (n * dt)
    # keep frequencies well inside the Nyquist band
    m_keep = int(0.25 * (math.pi / dt) / ds)
    s = ds * np.arange(m_keep)
    gh = sp_fft.rfft(g, n)[:m_keep] * np.exp(1j * s * a) * dt
    if np.max(np.abs(gh.imag)) > 1e-12:
        raise RuntimeError("cutoff transform is not real")
    scale = 1.0 / float(_chi_raw(eps, 0.0)[0])
    gh = gh.real * math.sqrt(scale)
    chi_hat = gh * gh
    above = np.nonzero(chi_hat >= TAIL_TOL * chi_hat[0])[0]
    lam_tail = float(s[above[-1] + 1])
    m_trim = min(m_keep, int(1.5 * lam_tail / ds) + 10)
    s, gh, chi_hat = s[:m_trim], gh[:m_trim], chi_hat[:m_trim]
    s.setflags(write=False)
    chi_hat.setflags(write=False)
    bc = ((1, 0.0), "not-a-knot")
    return GoodCutoff(
        epsilon=eps, s_grid=s, chi_hat_grid=chi_hat, lambda_tail=lam_tail, scale=scale,
        _gamma_hat=CubicSpline(s, gh, bc_type=bc),
        _chi_hat_int=CubicSpline(s, chi_hat, bc_type=bc).antiderivative(),
    )


# -- spectra ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectrumBlock:
    """Eigenpairs of ``T_k`` (possibly restricted to some isotypes).

    ``groups`` is a tuple of ``(rows, vecs)``: ``rows`` are monomial indices
    and ``vecs`` the eigenvector coefficients over them (``None`` for the
    identity, i.e. a diagonal block). Eigenvalues and weights are listed in
    group order.
    """

    k: int
    eigenvalues: np.ndarray
    varpi: np.ndarray
    groups: tuple
    residual: float


@dataclass(frozen=True, eq=False)
class SpectrumRecord:
    """All computed eigenvalues ``lambda_j^(varpi)`` with eigenvectors."""

    symbol_text: str
    d: int
    weights: tuple
    k_max: int
    f_min: float
    f_max: float
    blocks: tuple = field(repr=False)
    isotypes: tuple = None
    residual_bound: float = 0.0

    @cached_property
    def _flat(self):
        lam = np.concatenate([b.eigenvalues for b in self.blocks])
        var = np.concatenate([b.varpi for b in self.blocks])
        deg = np.concatenate([np.full(len(b.eigenvalues), b.k) for b in self.blocks])
        return lam, var, deg

    @property
    def eigenvalues(self):
        return self._flat[0]

    @property
    def varpis(self):
        return self._flat[1]

    @property
    def degrees(self):
        return self._flat[2]

    def complete_up_to(self):
        """Largest ``lambda`` for which the record is complete."""
        return self.k_max * self.f_min


def _solve_block(f, k, spec, isotypes, backend):
    block = monomial_norms(k, f.d)
    if spec is None:
        weights = np.zeros(block.dim, dtype=np.int64)
    else:
        weights = monomial_weights(spec, block)
    keep = np.arange(block.dim) if isotypes is None else np.nonzero(np.isin(weights, isotypes))[0]
    tb = assemble_block(f, k, backend=backend, indices=keep)
    if tb.diagonal:
        lam = np.asarray(tb.data, dtype=float)
        _check_bounds(f, k, lam)
        return SpectrumBlock(k=k, eigenvalues=lam, varpi=weights[keep],
                             groups=((keep, None),), residual=0.0)
    full = tb.matrix
    lams, vars_, groups = [], [], []
    residual = 0.0
    for v in np.unique(weights[keep]):
        local = np.nonzero(weights[keep] == v)[0]
        sub = full[np.ix_(local, local)]
        try:
            lam, vec = np.linalg.eigh(sub)
        except np.linalg.LinAlgError as exc:
            raise EigensolverError(f"eigh failed on block k={k}, varpi={v}: {exc}") from exc
        norm = max(float(np.max(np.abs(lam))), 1e-300)
        res = float(np.max(np.linalg.norm(sub @ vec - vec * lam, axis=0))) / norm
        if res > RESIDUAL_TOL:
            raise EigensolverError(f"residual {res:.2e} on block k={k}, varpi={v}")
        residual = max(residual, res)
        _check_bounds(f, k, lam)
        lams.append(lam)
        vars_.append(np.full(len(lam), v))
        groups.append((keep[local], vec))
    if not lams:
        return SpectrumBlock(k=k, eigenvalues=np.zeros(0), varpi=np.zeros(0, dtype=np.int64),
                             groups=(), residual=0.0)
    return SpectrumBlock(k=k, eigenvalues=np.concatenate(lams), varpi=np.concatenate(vars_),
                         groups=tuple(groups), residual=residual)


def _check_bounds(f, k, lam):
    if len(lam) == 0:
        return
    slack = 1e-9 * max(k, 1) * f.max
    if lam.min() < k * f.min - slack or lam.max() > k * f.max + slack:
        log.warning("block k=%d eigenvalues [%.6g, %.6g] leave [k min f, k max f]; "
                    "symbol bounds are sampled", k, lam.min(), lam.max())


def _as_symbol(f, d):
    if isinstance(f, SymbolFunction):
        return f
    return parse_symbol(str(f), d=d)


def compute_spectrum(f, p=None, k_max=50, d=None, isotypes=None, jobs=1, backend="auto"):
    """Eigendecomposition of ``T_k`` for ``0 <= k <= k_max``.

    Parameters
    ----------
    f : SymbolFunction or str
        Positive symbol; must be invariant under the action ``p``.
    p : sequence of int, optional
        Circle action weights; ``None`` means no action (all weights 0).
    k_max : int
    d : int, optional
        Needed only when ``f`` is given as text.
    isotypes : sequence of int, optional
        Keep only these weights.
    jobs : int
        Worker threads for the sweep over ``k``.
    """
    if d is None:
        d = f.d if isinstance(f, SymbolFunction) else (len(p) - 1 if p is not None else 1)
    f = _as_symbol(f, d)
    if not f.min > 0:
        raise PreconditionError("symbol must be positive")
    if k_max < 0:
        raise PreconditionError("k_max must be >= 0")
    spec = None
    if p is not None:
        spec = CircleActionSpec(tuple(p))
        if spec.d != f.d:
            raise PreconditionError("weights and symbol have different dimensions")
        if f.is_polynomial:
            if f.weight_under(spec.weights) - {0}:
                raise PreconditionError(f"symbol {f.text!r} is not invariant under {spec.weights}")
        else:
            check_symbol_invariance(f, spec)
    iso = None if isotypes is None else tuple(int(v) for v in isotypes)

    def work(k):
        return _solve_block(f, k, spec, iso, backend)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(work, range(k_max + 1)))
    else:
        blocks = [work(k) for k in range(k_max + 1)]
    return SpectrumRecord(
        symbol_text=f.text, d=f.d, weights=None if spec is None else spec.weights,
        k_max=int(k_max), f_min=float(f.min), f_max=float(f.max), blocks=tuple(blocks),
        isotypes=iso, residual_bound=max((b.residual for b in blocks), default=0.0),
    )


def _select(record, varpi):
    lam, var, _ = record._flat
    if varpi is None:
        return lam
    if record.weights is None:
        raise PreconditionError("isotype query on a spectrum without circle action")
    if record.isotypes is not None and int(varpi) not in record.isotypes:
        raise PreconditionError(f"isotype {varpi} was not computed")
    return lam[var == int(varpi)]


def _required_k(record, top):
    return int(math.ceil(top / record.f_min))


def _guard(record, top):
    if top > record.complete_up_to() + 1e-12:
        raise IncompleteSpectrumError(
            f"spectrum of k_max={record.k_max} is incomplete beyond {record.complete_up_to():.6g}, "
            f"query reaches {top:.6g}",
            _required_k(record, top),
        )


def counting(record, lam, varpi=None):
    """``N^(varpi)(lambda) = #{j : lambda_j^(varpi) <= lambda}``."""
    lam = float(lam)
    _guard(record, lam)
    return int(np.count_nonzero(_select(record, varpi) <= lam))


def _isotype_dim_bound(d, k):
    return math.exp(gammaln(k + d + 1) - gammaln(k + 1) - gammaln(d + 1))


def _truncation_bound(record, cutoff, lam):
    # eigenvalues of blocks k > k_max are >= k f_min; bound each by the tail envelope
    err = 0.0
    k = record.k_max + 1
    while True:
        env = float(cutoff.tail_envelope(k * record.f_min - lam))
        if env == 0.0:
            break
        err += _isotype_dim_bound(record.d, k) * env
        k += 1
    return err


def smoothed_trace(record, cutoff, lam, varpi=None, return_error=False):
    """``sum_j chi-hat(lambda - lambda_j^(varpi))`` with certified truncation.

    Requires the spectrum to be complete on ``lambda + Lambda_tail``.
    """
    lam = float(lam)
    _guard(record, lam + cutoff.lambda_tail)
    vals = _select(record, varpi)
    window = np.abs(vals - lam) <= cutoff.s_grid[-1]
    total = float(np.sum(cutoff.chi_hat(lam - vals[window])))
    if return_error:
        return total, _truncation_bound(record, cutoff, lam)
    return total


def tauberian_integral(record, cutoff, lam, varpi=None):
    """``int_{-inf}^lambda smoothed_trace(tau) d tau = sum_j H(lambda - lambda_j)``
    with ``H`` the primitive of ``chi-hat``."""
    lam = float(lam)
    _guard(record, lam + cutoff.lambda_tail)
    vals = _select(record, varpi)
    return float(np.sum(cutoff.chi_hat_integral(lam - vals)))


def block_eigenfunctions(block, x):
    """Values ``e_j(x)`` of the eigenfunctions of ``block`` (group order)."""
    hb = monomial_norms(block.k, len(np.asarray(x.z if hasattr(x, "z") else x)) - 1)
    out = []
    for rows, vecs in block.groups:
        s = evaluate_sections(hb.multi_indices[rows], x)
        out.append(s if vecs is None else vecs.T @ s)
    return np.concatenate(out) if out else np.zeros(0, dtype=complex)


def smoothed_kernel(record, cutoff, lam, varpi, x1, x2):
    """``sum_j chi-hat(lambda - lambda_j) e_j(x1) conj(e_j(x2))``."""
    lam = float(lam)
    _guard(record, lam + cutoff.lambda_tail)
    reach = cutoff.s_grid[-1]
    total = 0j
    for b in record.blocks:
        if b.k * record.f_max < lam - reach or b.k * record.f_min > lam + reach:
            continue
        mask = np.ones(len(b.eigenvalues), dtype=bool) if varpi is None else (b.varpi == int(varpi))
        if varpi is not None and record.weights is None:
            raise PreconditionError("isotype query on a spectrum without circle action")
        if not mask.any():
            continue
        w = cutoff.chi_hat(lam - b.eigenvalues) * mask
        if not np.any(w):
            continue
        e1 = block_eigenfunctions(b, x1)
        e2 = e1 if x2 is x1 else block_eigenfunctions(b, x2)
        total += np.sum(w * e1 * np.conj(e2))
    return complex(total)


# -- power-law fits ---------------------------------------------------------


class PowerLawFit(RegressorMixin, BaseEstimator):
    """Least-squares fit ``log N = exponent * log(lambda) + log(constant)``."""

    def fit(self, X, y):
        X = check_array(X, ensure_2d=False).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        if len(X) != len(y):
            raise PreconditionError("lambda grid and counts differ in length")
        ok = (X > 0) & (y > 0)
        if ok.sum() < 10 or np.ptp(np.log(X[ok])) == 0:
            raise PreconditionError("need at least 10 distinct positive grid points")
        slope, intercept = np.polyfit(np.log(X[ok]), np.log(y[ok]), 1)
        self.exponent_ = float(slope)
        self.constant_ = float(math.exp(intercept))
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        X = check_array(X, ensure_2d=False).reshape(-1)
        return self.constant_ * X ** self.exponent_


def weyl_fit(record, lambdas, varpi=None):
    """Power-law fit of ``N^(varpi)`` over ``lambdas``; returns
    ``(exponent, constant)``."""
    lambdas = np.asarray(lambdas, dtype=float)
    counts = np.array([counting(record, lam, varpi) for lam in lambdas])
    fit = PowerLawFit().fit(lambdas, counts)
    return fit.exponent_, fit.constant_


class ToeplitzSpectrum(BaseEstimator):
    """Estimator wrapper around :func:`compute_spectrum`.

    ``fit`` computes the spectrum; ``predict`` returns counting function
    values ``N^(varpi)(lambda)`` for a column of ``lambda`` values.
    """

    def __init__(self, symbol="1", d=1, weights=None, k_max=50, isotypes=None,
                 varpi=None, backend="auto", n_jobs=1):
        self.symbol = symbol
        self.d = d
        self.weights = weights
        self.k_max = k_max
        self.isotypes = isotypes
        self.varpi = varpi
        self.backend = backend
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        self.record_ = compute_spectrum(
            self.symbol, self.weights, self.k_max, d=self.d, isotypes=self.isotypes,
            jobs=self.n_jobs, backend=self.backend,
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "record_")
        X = check_array(X, ensure_2d=False).reshape(-1)
        return np.array([counting(self.record_, lam, self.varpi) for lam in X])

    def smoothed_trace(self, lam, epsilon=DEFAULT_EPSILON):
        check_is_fitted(self, "record_")
        return smoothed_trace(self.record_, good_cutoff(epsilon), lam, self.varpi)

    def smoothed_kernel(self, lam, x1, x2, epsilon=DEFAULT_EPSILON):
        check_is_fitted(self, "record_")
        return smoothed_kernel(self.record_, good_cutoff(epsilon), lam, self.varpi, x1, x2)
