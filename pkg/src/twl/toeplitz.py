"""First-order Toeplitz blocks ``T_k = k P_k M_f P_k`` on ``H(X)_k``.

The operator is realized as ``Pi f^{1/2} D f^{1/2} Pi`` with
``D = (1/i) d/dtheta``. For structure-invariant ``f`` the restriction to
``H(X)_k`` is ``k`` times the compression of multiplication by ``f``, whose
matrix in the orthonormal monomial basis is computed here.

Two backends are available. ``"exact"`` expands polynomial symbols into
monomials and uses closed-form sphere integrals. ``"quadrature"`` integrates
on the simplex-times-torus parametrization and accepts any vectorized
callable.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.special import gammaln

from ._quadrature import sphere_rule
from .exceptions import PreconditionError, QuadratureError
from .hardy import _index_lookup, log_norm2, multi_indices

log = logging.getLogger(__name__)

QUAD_TOL = 1e-9


@dataclass(frozen=True)
class ToeplitzBlock:
    """The matrix of ``T_k`` on (a sub-basis of) ``H(X)_k``.

    ``data`` is the diagonal when ``diagonal`` is true, otherwise the full
    Hermitian matrix. ``indices`` lists the monomial rows (positions in
    :func:`twl.hardy.multi_indices`) spanned by the block.
    """

    degree: int
    data: np.ndarray
    diagonal: bool
    indices: np.ndarray
    symbol_text: str
    hermitian_defect: float = 0.0

    @property
    def matrix(self):
        if self.diagonal:
            return np.diag(self.data.astype(complex))
        return self.data

    @property
    def dim(self):
        return len(self.indices)


def exact_monomial_integral(alpha, beta):
    """``int_X z^alpha conj(z)^beta dV_X``.

    Equals ``pi^d alpha! / (|alpha| + d)!`` when ``alpha == beta`` and zero
    otherwise.
    """
    alpha = np.asarray(alpha, dtype=np.int64)
    beta = np.asarray(beta, dtype=np.int64)
    if alpha.shape != beta.shape:
        raise PreconditionError("exponent vectors have different lengths")
    if alpha.sum() != beta.sum():
        raise PreconditionError("total degrees of alpha and beta differ")
    if np.any(alpha != beta):
        return 0.0
    return float(np.exp(log_norm2(alpha)))


def _exact_entries(f, k, idx, rows):
    """Matrix of ``M_f`` on the sub-basis ``rows`` of the degree ``k`` block."""
    d = f.d
    n = len(rows)
    log_n = log_norm2(idx[rows])
    log_pi = d * math.log(math.pi)
    diag_only = all(a == b for a, b in f.terms)
    out = np.zeros(n if diag_only else (n, n), dtype=complex)
    if not diag_only:
        lookup = _index_lookup(k, d)
        pos = {int(r): i for i, r in enumerate(rows)}
    for (a, b), c in f.terms.items():
        a = np.asarray(a)
        b = np.asarray(b)
        alpha = idx[rows]
        # <z^a conj(z)^b z^alpha, z^beta> is nonzero only for beta = alpha + a - b
        beta = alpha + a - b
        ok = np.all(beta >= 0, axis=1)
        logs = (
            log_pi
            + gammaln(alpha + a + 1).sum(axis=1)
            - gammaln(k + a.sum() + d + 1)
            - 0.5 * log_n
        )
        if diag_only:
            out += c * np.exp(logs - 0.5 * log_n)
            continue
        for i in np.nonzero(ok)[0]:
            j_full = lookup.get(tuple(int(v) for v in beta[i]))
            j = pos.get(j_full)
            if j is None:
                continue
            out[j, i] += c * np.exp(logs[i] - 0.5 * log_n[j])
    return out, diag_only


def _section_matrix(z, alpha):
    """Orthonormal sections at points ``z`` (rows) for rows of ``alpha``."""
    logz = np.log(np.abs(z)) + 1j * np.angle(z)
    return np.exp(logz @ alpha.T - 0.5 * log_norm2(alpha)[None, :])


def _quadrature_matrix(f, k, alpha, n_simplex, deg, chunk=200_000):
    d = f.d
    n_phase = 2 * k + 2 + 2 * deg
    z, w = sphere_rule(d, n_simplex, n_phase, fix_first_phase=True)
    # the pinned phase is compensated by the fiber average, exact for
    # structure-invariant integrands
    m = np.zeros((len(alpha), len(alpha)), dtype=complex)
    for start in range(0, len(z), chunk):
        zz = z[start:start + chunk]
        s = _section_matrix(zz, alpha)
        fw = f(zz) * w[start:start + chunk]
        m += s.conj().T @ (fw[:, None] * s)
    return m


def assemble_block(f, k, backend="auto", indices=None, n_simplex=None):
    """Assemble ``T_k`` for a positive structure-invariant symbol.

    Parameters
    ----------
    f : SymbolFunction
    k : int
        Degree, ``k >= 0`` (``T_0 = 0``).
    backend : {"auto", "exact", "quadrature"}
        ``"auto"`` picks ``"exact"`` for polynomial symbols.
    indices : array_like of int, optional
        Restrict to these rows of the monomial basis (an isotype sub-basis).
    n_simplex : int, optional
        Gauss-Jacobi order per simplex direction for the quadrature backend.

    Returns
    -------
    ToeplitzBlock

    Raises
    ------
    QuadratureError
        If two quadrature orders disagree by more than ``1e-9``.
    """
    if k < 0:
        raise PreconditionError("k must be >= 0")
    if f.min is None or not f.min > 0:
        raise PreconditionError("symbol must be positive")
    if f.is_polynomial and not f.is_fiber_invariant:
        raise PreconditionError("symbol is not invariant under the structure circle action")
    idx = multi_indices(k, f.d)
    rows = np.arange(len(idx)) if indices is None else np.asarray(indices, dtype=np.int64)
    if backend == "auto":
        backend = "exact" if f.is_polynomial else "quadrature"
    if backend == "exact":
        if not f.is_polynomial:
            raise PreconditionError("exact backend needs a polynomial symbol")
        m, diag = _exact_entries(f, k, idx, rows)
        defect = 0.0
    elif backend == "quadrature":
        deg = f.degree if f.is_polynomial else 8
        n = n_simplex or (k + deg) // 2 + 4
        m = _quadrature_matrix(f, k, idx[rows], n, deg)
        m2 = _quadrature_matrix(f, k, idx[rows], n + 2, deg)
        err = float(np.max(np.abs(m - m2))) if m.size else 0.0
        if err > QUAD_TOL:
            raise QuadratureError(
                f"quadrature for k={k}, symbol {f.text!r} did not converge: "
                f"orders {n} and {n + 2} differ by {err:.3e}"
            )
        m = m2
        defect = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        m = 0.5 * (m + m.conj().T)
        diag = False
        log.debug("k=%d quadrature hermitian defect %.3e", k, defect)
    else:
        raise PreconditionError(f"unknown backend {backend!r}")
    data = k * (m.real if diag else m)
    data.setflags(write=False)
    return ToeplitzBlock(
        degree=int(k), data=data, diagonal=diag, indices=rows,
        symbol_text=f.text, hermitian_defect=defect,
    )
