"""Hardy space isotypes ``H(X)_k`` and their Szego kernels.

``H(X)_k`` is spanned by the restrictions to ``X`` of homogeneous degree
``k`` monomials ``z^alpha``; with the volume ``dV_X`` these are orthogonal
with ``|z^alpha|^2 = pi^d alpha! / (k + d)!``. All factorials are handled
in the log domain.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.special import gammaln

from .exceptions import PreconditionError
from .geometry import OMEGA_SIGN, as_point, chart_point, heisenberg_chart


@lru_cache(maxsize=64)
def _multi_indices(k, n):
    if n == 1:
        return np.array([[k]], dtype=np.int64)
    if n == 2:
        first = np.arange(k, -1, -1, dtype=np.int64)
        out = np.column_stack([first, k - first])
        out.setflags(write=False)
        return out
    rows = []
    for first in range(k, -1, -1):
        rest = _multi_indices(k - first, n - 1)
        rows.append(np.column_stack([np.full(len(rest), first), rest]))
    out = np.vstack(rows)
    out.setflags(write=False)
    return out


def multi_indices(k, d):
    """All ``alpha`` in ``N^{d+1}`` with ``|alpha| = k``, lexicographically
    decreasing in ``alpha_0``."""
    return _multi_indices(int(k), int(d) + 1)


def log_norm2(alpha):
    """``log |z^alpha|^2_{L^2(dV_X)}`` for one or many multi-indices."""
    alpha = np.asarray(alpha)
    d = alpha.shape[-1] - 1
    k = alpha.sum(axis=-1)
    return d * math.log(math.pi) + gammaln(alpha + 1).sum(axis=-1) - gammaln(k + d + 1)


@dataclass(frozen=True)
class HardyBlock:
    """Orthogonal monomial basis of ``H(X)_k``."""

    degree: int
    d: int
    multi_indices: np.ndarray
    log_norms2: np.ndarray

    @property
    def norms2(self):
        return np.exp(self.log_norms2)

    @property
    def dim(self):
        return len(self.multi_indices)

    def index_of(self, alpha):
        lookup = _index_lookup(self.degree, self.d)
        return lookup[tuple(int(a) for a in alpha)]


@lru_cache(maxsize=64)
def _index_lookup(k, d):
    return {tuple(int(a) for a in row): i for i, row in enumerate(multi_indices(k, d))}


def monomial_norms(k, d):
    """Build the :class:`HardyBlock` of degree ``k`` on ``S^{2d+1}``."""
    if k < 0 or d < 1:
        raise PreconditionError("need k >= 0 and d >= 1")
    idx = multi_indices(k, d)
    logs = log_norm2(idx)
    logs.setflags(write=False)
    return HardyBlock(degree=int(k), d=int(d), multi_indices=idx, log_norms2=logs)


def _log_monomials(alpha, z):
    """``log z^alpha`` (complex) for rows of ``alpha``; zero powers of zero
    coordinates contribute ``0``."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore"):
        logabs = np.log(np.abs(z))
    ang = np.angle(z)
    alpha = np.asarray(alpha)
    mask = alpha > 0
    re = (alpha * np.where(mask, logabs, 0.0)).sum(axis=-1)
    im = (alpha * ang).sum(axis=-1)
    return re + 1j * im


def evaluate_sections(alpha, x):
    """Normalized sections ``z^alpha / |z^alpha|`` at ``x`` for rows of
    ``alpha`` (shape ``(n, d+1)``)."""
    z = as_point(x).z
    alpha = np.atleast_2d(alpha)
    return np.exp(_log_monomials(alpha, z) - 0.5 * log_norm2(alpha))


def evaluate_section(block, alpha, x):
    """Value at ``x`` of the orthonormal section ``z^alpha / |z^alpha|``."""
    alpha = np.asarray(alpha)
    if alpha.sum() != block.degree or alpha.size != block.d + 1:
        raise PreconditionError("multi-index is not in the block")
    return complex(evaluate_sections(alpha[None, :], x)[0])


def evaluate_block(block, x):
    """All orthonormal sections of the block at ``x``."""
    return evaluate_sections(block.multi_indices, x)


def szego_constant(k, d):
    """``binom(k + d, d) d! / pi^d``, the diagonal value of ``Pi_k``."""
    return math.exp(gammaln(k + d + 1) - gammaln(k + 1) - d * math.log(math.pi))


def szego_block(k, x, y):
    """Closed form ``Pi_k(x, y) = binom(k+d, d) d!/pi^d <x, y>^k``."""
    zx, zy = as_point(x).z, as_point(y).z
    d = zx.size - 1
    pairing = np.vdot(zy, zx)
    if pairing == 0:
        return 0j if k > 0 else complex(szego_constant(0, d))
    return complex(np.exp(math.log(szego_constant(k, d)) + k * np.log(pairing)))


def szego_block_sum(k, x, y):
    """``Pi_k(x, y)`` by direct summation over the orthonormal basis."""
    block = monomial_norms(k, as_point(x).d)
    return complex(np.sum(evaluate_block(block, x) * np.conj(evaluate_block(block, y))))


def psi2(u, v):
    """``psi_2(u, v) = -i omega_0(u, v) - |u - v|^2 / 2`` on ``C^d``.

    ``omega_0(u, v) = Im<v, u>`` is the standard symplectic form.
    """
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    omega = OMEGA_SIGN * np.vdot(u, v).imag
    return complex(-1j * omega - 0.5 * np.vdot(u - v, u - v).real)


def near_diagonal_szego_check(k, x, u, v):
    """Scaled Szego kernel ``Pi_k(x + u/sqrt k, x + v/sqrt k)`` and its
    universal model ``(k/pi)^d exp(psi_2(u, v))``.

    Displacements are taken in the Heisenberg chart centered at ``x``.

    Returns
    -------
    (measured, predicted) : tuple of complex
    """
    x = as_point(x)
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    if max(np.linalg.norm(u), np.linalg.norm(v)) > 2:
        raise PreconditionError("displacements must satisfy |u|, |v| <= 2")
    chart = heisenberg_chart(x)
    s = math.sqrt(k)
    xu = chart_point(chart, 0.0, u / s)
    xv = chart_point(chart, 0.0, v / s)
    measured = szego_block(k, xu, xv)
    predicted = (k / math.pi) ** x.d * np.exp(psi2(u, v))
    return measured, complex(predicted)
