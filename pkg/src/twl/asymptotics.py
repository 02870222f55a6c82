"""Leading-order predictions for counting functions, traces and kernels.

The constants are built from

``Gamma = int_{X'} (1 / V_eff_X) f^{-(d - e + 1)} dV_{X'}``,

with ``e = 1`` for a circle action and ``e = 0`` without one (then
``X' = X`` and ``V_eff = 1``). ``dV_{X'}`` is ``(1/2pi) alpha`` wedged with
the Riemannian volume of ``M'``.

The module also checks the linear-algebra lemmas behind the stationary
phase computations (determinants, signatures and an explicit inverse).
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import null_space
from scipy.stats import unitary_group
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._quadrature import polytope_rule, simplex_rule, torus_grid
from .exceptions import DegenerateActionError, PreconditionError, QuadratureError
from .geometry import as_point, heisenberg_chart, tangent_split, zero_locus_vertices
from .hardy import psi2
from .symbols import SymbolFunction, parse_symbol
from .symmetry import (
    CircleActionSpec,
    IsotypeLabel,
    a_gen as sample_a_gen,
    a_phi_varpi,
    a_T_varpi,
    stabilizer_jacobian,
    stabilizers,
)

GAMMA_RTOL = 1e-9
SIGNATURE_RTOL = 1e-10


def _as_symbol(f, d):
    return f if isinstance(f, SymbolFunction) else parse_symbol(str(f), d=d)


def _torus_average(f, w, n_phase):
    """Average of ``f(sqrt(w) e^{i theta})`` over the torus (first phase
    pinned, valid for structure-invariant ``f``)."""
    root = np.sqrt(np.clip(w, 0.0, None))
    if f.depends_only_on_w:
        return f(root.astype(complex))
    t, tw = torus_grid(w.shape[1] - 1, n_phase)
    t = np.column_stack([np.zeros(len(t)), t])
    z = root[:, None, :] * np.exp(1j * t)[None, :, :]
    return f(z) @ tw


def _gamma_once(f, spec, n, power):
    d = f.d
    deg = f.degree if f.is_polynomial else 6
    n_phase = 2 * deg + 2
    if spec is None:
        nodes, weights = simplex_rule(d, n)
        w = np.column_stack([1.0 - nodes.sum(axis=1), nodes])
        return math.pi**d * float(np.sum(weights * _torus_average(f, w, n_phase) ** (-power)))
    p = spec.p
    verts = zero_locus_vertices(spec.weights)
    basis = null_space(np.vstack([np.ones(d + 1), p]))
    coords = (verts - verts[0]) @ basis
    if np.linalg.matrix_rank(coords, tol=1e-12) < d - 1:
        raise DegenerateActionError("0 is not a regular value of the moment map")
    nodes, weights = polytope_rule(coords, n)
    w = verts[0] + nodes @ basis.T
    speed = np.sqrt(w @ p**2)
    g = np.array([math.gcd(*[abs(int(v)) for v, wj in zip(spec.weights, row) if wj > 1e-12])
                  for row in w])
    v_eff = 2 * math.pi * speed / g
    integrand = 2 * speed / v_eff * _torus_average(f, w, n_phase) ** (-power)
    # delta(sum p_j w_j) on the simplex: Lebesgue dw_1..dw_d is the
    # Hausdorff measure of the simplex divided by sqrt(d+1)
    jac = 1.0 / (math.sqrt(d + 1) * np.linalg.norm(p - p.mean()))
    return math.pi**d * jac * float(np.sum(weights * integrand))


def gamma_integral(f, p=None, d=None, n=None, return_error=False):
    """``Gamma(Phi, f)`` by quadrature over the parametrized ``X'``.

    ``X'`` is parametrized by ``|z_j|^2 = w_j`` in the zero locus of
    ``sum p_j w_j`` inside the simplex and torus phases. The integral is
    computed at two quadrature orders; a relative gap above ``1e-9`` is an
    error.
    """
    if d is None:
        d = f.d if isinstance(f, SymbolFunction) else (len(p) - 1 if p is not None else 1)
    f = _as_symbol(f, d)
    if not f.min > 0:
        raise PreconditionError("symbol must be positive")
    spec = None if p is None else CircleActionSpec(tuple(p))
    e = 0 if spec is None else 1
    power = f.d - e + 1
    n = n or 24
    g1 = _gamma_once(f, spec, n, power)
    g2 = _gamma_once(f, spec, n + 4, power)
    err = abs(g1 - g2)
    if err > GAMMA_RTOL * abs(g2):
        raise QuadratureError(f"Gamma quadrature did not converge (orders {n}, {n + 4}: {g1!r}, {g2!r})")
    return (g2, err) if return_error else g2


@dataclass(frozen=True)
class WeylParams:
    """Constants entering the leading asymptotics."""

    d: int
    e: int
    gamma: float
    dim: int = 1
    a_gen: float = 1.0
    symbol: SymbolFunction = field(default=None, repr=False, compare=False)
    weights: tuple = None


def weyl_parameters(f, p=None, varpi=0, d=None, rng=None):
    """Compute ``Gamma`` and the generic character average for ``varpi``."""
    if d is None:
        d = f.d if isinstance(f, SymbolFunction) else (len(p) - 1 if p is not None else 1)
    f = _as_symbol(f, d)
    if p is None:
        return WeylParams(d=f.d, e=0, gamma=gamma_integral(f), symbol=f)
    spec = CircleActionSpec(tuple(p))
    return WeylParams(
        d=f.d, e=1, gamma=gamma_integral(f, spec.weights), dim=IsotypeLabel(varpi).dim,
        a_gen=sample_a_gen(spec, varpi, rng), symbol=f, weights=spec.weights,
    )


def predicted_counting(params, lam):
    """``pi/(d-e+1) dim a_gen Gamma (lambda/pi)^{d-e+1}``."""
    n = params.d - params.e + 1
    return math.pi / n * params.dim * params.a_gen * params.gamma * (np.asarray(lam) / math.pi) ** n


def predicted_trace(params, lam):
    """``2 pi dim a_gen Gamma (lambda/pi)^{d-e}``."""
    return (2 * math.pi * params.dim * params.a_gen * params.gamma
            * (np.asarray(lam) / math.pi) ** (params.d - params.e))


def sigma_hat_volume(params):
    """Symplectic volume ``2^{d-e+1} pi / (d-e+1) Gamma`` of the reduced
    sublevel set."""
    n = params.d - params.e + 1
    return 2**n * math.pi / n * params.gamma


def volume_form_counting(params, lam):
    """``dim^2 vol (lambda / 2pi)^{d-e+1}``, the volume form of the law."""
    n = params.d - params.e + 1
    return params.dim**2 * sigma_hat_volume(params) * (np.asarray(lam) / (2 * math.pi)) ** n


@dataclass(frozen=True)
class QuadraticExponents:
    Q_h: complex
    Q_vt: complex


def q_h(f, x, split1, split2):
    """``Q_h = psi_2(v1_h, v2_h) / f(x)``."""
    s = float(f(as_point(x).z))
    return psi2(split1.hor, split2.hor) / s


def _omega(u, v):
    return float(np.vdot(u, v).imag)


def q_vt(f, x, split1, split2):
    """``[i (omega(v1_v, v1_t) - omega(v2_v, v2_t)) - |v1_t|^2 - |v2_t|^2] / f(x)``."""
    s = float(f(as_point(x).z))
    phase = _omega(split1.ver, split1.trasv) - _omega(split2.ver, split2.trasv)
    decay = np.vdot(split1.trasv, split1.trasv).real + np.vdot(split2.trasv, split2.trasv).real
    return complex(1j * phase - decay) / s


def quadratic_exponents(f, x, split1, split2):
    return QuadraticExponents(Q_h=q_h(f, x, split1, split2), Q_vt=q_vt(f, x, split1, split2))


def _kernel_constants(params, x, varpi):
    x = as_point(x)
    if params.weights is None:
        raise PreconditionError("kernel predictions need a circle action")
    st = stabilizers(params.weights, x)
    A = a_T_varpi(x, params.symbol, params.weights, varpi, e=params.e)
    return x, st, A, float(params.symbol(x.z))


def predicted_kernel_diag(params, x, w_t, lam, varpi):
    """``2 pi A a (lambda/pi)^{d-e/2} exp(-2 |w_t|^2 / f(x))``.

    ``w_t`` is a transverse displacement (ambient horizontal vector or its
    norm).
    """
    x, st, A, s = _kernel_constants(params, x, varpi)
    a = a_phi_varpi(st, varpi)
    wn = float(np.linalg.norm(np.atleast_1d(w_t)))
    return 2 * math.pi * A * a * (lam / math.pi) ** (params.d - params.e / 2) * math.exp(-2 * wn**2 / s)


def predicted_kernel_offdiag(params, x, point1, point2, lam, varpi):
    """Leading term of ``S(x + (theta1, w1)/sqrt(lambda), x + (theta2, w2)/sqrt(lambda))``.

    ``point1 = (theta1, w1)`` with ``w1`` in Heisenberg chart coordinates at
    ``x``. The stabilizer sum uses the chart Jacobians ``A_g``.
    """
    x, st, A, s = _kernel_constants(params, x, varpi)
    chart = heisenberg_chart(x)
    (t1, w1), (t2, w2) = point1, point2
    w1 = np.atleast_1d(np.asarray(w1, dtype=complex))
    w2 = np.atleast_1d(np.asarray(w2, dtype=complex))
    sp1 = tangent_split(x, chart.to_ambient(w1), params.weights)
    sp2 = tangent_split(x, chart.to_ambient(w2), params.weights)
    exponent = 1j * math.sqrt(lam) * (t1 - t2) / s + q_vt(params.symbol, x, sp1, sp2)
    total = 0j
    for g in st.angles_X:
        ag = stabilizer_jacobian(chart, g, params.weights)
        spg = tangent_split(x, chart.to_ambient(ag @ w2), params.weights)
        total += np.conj(np.exp(1j * varpi * g)) * np.exp(q_h(params.symbol, x, sp1, spg))
    total /= st.order_X
    return complex(2 * math.pi * A * np.exp(exponent) * (lam / math.pi) ** (params.d - params.e / 2) * total)


@dataclass(frozen=True)
class Prediction:
    """A leading-order prediction of the given ``kind`` as a function of
    ``lambda``."""

    kind: str
    params: WeylParams

    def __call__(self, lam):
        if self.kind == "counting":
            return predicted_counting(self.params, lam)
        if self.kind == "trace":
            return predicted_trace(self.params, lam)
        if self.kind == "volume":
            return volume_form_counting(self.params, lam)
        raise PreconditionError(f"unknown prediction kind {self.kind!r}")


class WeylLaw(RegressorMixin, BaseEstimator):
    """Estimator giving predicted counting values ``N^(varpi)(lambda)``."""

    def __init__(self, symbol="1", d=1, weights=None, varpi=0):
        self.symbol = symbol
        self.d = d
        self.weights = weights
        self.varpi = varpi

    def fit(self, X=None, y=None):
        self.params_ = weyl_parameters(self.symbol, self.weights, self.varpi, d=self.d)
        self.gamma_ = self.params_.gamma
        self.a_gen_ = self.params_.a_gen
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, ensure_2d=False).reshape(-1)
        return predicted_counting(self.params_, X)


# -- linear algebra lemmas --------------------------------------------------


@dataclass(frozen=True)
class HessianReport:
    name: str
    det: float
    expected_det: float
    det_rel_error: float
    signature: int
    expected_signature: object
    inverse_error: float = 0.0
    tol: float = 1e-8

    @property
    def passed(self):
        ok = self.det_rel_error <= self.tol and self.inverse_error <= self.tol
        if self.expected_signature is not None:
            ok = ok and self.signature == self.expected_signature
        return bool(ok)


def signature(m):
    """Signature of a symmetric matrix, counting eigenvalue signs above
    ``1e-10 |m|``."""
    ev = np.linalg.eigvalsh(m)
    thresh = SIGNATURE_RTOL * max(np.max(np.abs(ev)), 1e-300)
    return int(np.sum(ev > thresh) - np.sum(ev < -thresh))


def realify(u):
    """Real ``2d x 2d`` matrix of a complex ``d x d`` matrix in the
    coordinates ``(Re w, Im w)``."""
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


def random_unitary_symplectic(d, rng):
    """Realification of a Haar-random unitary, orthogonal and symplectic."""
    return realify(unitary_group.rvs(d, random_state=rng) if d > 1
                   else np.exp(2j * np.pi * rng.uniform()) * np.ones((1, 1)))


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def signature_lemma_check(R, S):
    """``C = [[0, R^T], [R, S]]``: ``det C = (-1)^r det(R)^2`` and, when
    ``det R > 0``, ``sgn C = 0``."""
    R = np.asarray(R, dtype=float)
    S = np.asarray(S, dtype=float)
    r = R.shape[0]
    if not np.allclose(S, S.T):
        raise PreconditionError("S must be symmetric")
    C = np.block([[np.zeros((r, r)), R.T], [R, S]])
    expected = (-1) ** r * np.linalg.det(R) ** 2
    det = np.linalg.det(C)
    return HessianReport(
        name="signature_lemma", det=det, expected_det=expected, det_rel_error=_rel(det, expected),
        signature=signature(C), expected_signature=0 if np.linalg.det(R) > 0 else None,
    )


def upsilon_hessian(A, phi_nu):
    n = A.shape[0]
    return np.block([[np.zeros((n, n)), -A.T], [-A, -phi_nu * np.eye(n)]])


def hessian_upsilon_check(A, phi_nu):
    """``[[0, -A^T], [-A, -Phi_nu I]]`` has determinant 1 and signature 0."""
    H = upsilon_hessian(np.asarray(A, dtype=float), float(phi_nu))
    det = np.linalg.det(H)
    return HessianReport(name="hessian_upsilon", det=det, expected_det=1.0,
                         det_rel_error=_rel(det, 1.0), signature=signature(H), expected_signature=0)


def hessian_K(varsigma, D, A, theta1=0.0):
    """The ``(4 + 4d)``-square Hessian in the variables
    ``(t, theta, r, tau, v, Omega)``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    D = np.asarray(D, dtype=float).reshape(n)
    H = np.zeros((4 + 2 * n, 4 + 2 * n))
    H[0, 1] = H[1, 0] = 1.0
    H[1, 2] = H[2, 1] = -1.0
    H[2, 3] = H[3, 2] = varsigma
    v, om = slice(4, 4 + n), slice(4 + n, 4 + 2 * n)
    H[3, om] = D
    H[om, 3] = D
    H[v, om] = -A.T / varsigma
    H[om, v] = -A / varsigma
    H[om, om] = -theta1 * np.eye(n)
    return H


def hessian_K_inverse(varsigma, D, A, theta1=0.0):
    """The closed-form inverse of :func:`hessian_K`."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    D = np.asarray(D, dtype=float).reshape(n)
    G = np.zeros((4 + 2 * n, 4 + 2 * n))
    v, om = slice(4, 4 + n), slice(4 + n, 4 + 2 * n)
    G[0, 1] = G[1, 0] = 1.0
    G[0, 3] = G[3, 0] = G[2, 3] = G[3, 2] = 1.0 / varsigma
    G[0, v] = G[2, v] = D @ A
    G[v, 0] = G[v, 2] = A.T @ D
    G[v, v] = theta1 * varsigma**2 * np.eye(n)
    G[v, om] = -varsigma * A.T
    G[om, v] = -varsigma * A
    return G


def hessian_K_check(varsigma, D, A, theta1=0.0):
    """``det = varsigma^{2-4d}``, signature 0 and the closed-form inverse."""
    A = np.asarray(A, dtype=float)
    d = A.shape[0] // 2
    H = hessian_K(varsigma, D, A, theta1)
    G = hessian_K_inverse(varsigma, D, A, theta1)
    det = np.linalg.det(H)
    expected = varsigma ** (2 - 4 * d)
    inv_err = float(np.max(np.abs(H @ G - np.eye(len(H)))))
    return HessianReport(name="hessian_K", det=det, expected_det=expected,
                         det_rel_error=_rel(det, expected), signature=signature(H),
                         expected_signature=0, inverse_error=inv_err)


def q0_leading_amplitude(varsigma, d, e):
    """``Q_0 = (t/pi)^d r^{-e}`` at the critical point ``t = r = 1/varsigma``."""
    t = r = 1.0 / varsigma
    return (t / math.pi) ** d * r ** (-e)


def _random_positive_det(r, rng):
    R = rng.normal(size=(r, r))
    if np.linalg.det(R) < 0:
        R[0] *= -1
    return R


def hessian_suite(instances=1000, seed=0, d_max=4):
    """Run every lemma check on ``instances`` random inputs each.

    Returns a dict ``{name: list of HessianReport}``; deterministic for a
    fixed ``seed``.
    """
    rng = np.random.default_rng(seed)
    out = {"signature_lemma": [], "hessian_upsilon": [], "hessian_K": []}
    for _ in range(instances):
        r = int(rng.integers(1, 2 * d_max + 1))
        S = rng.normal(size=(r, r))
        out["signature_lemma"].append(signature_lemma_check(_random_positive_det(r, rng), S + S.T))
        d = int(rng.integers(1, d_max + 1))
        A = random_unitary_symplectic(d, rng)
        out["hessian_upsilon"].append(hessian_upsilon_check(A, rng.normal()))
        d = int(rng.integers(1, d_max + 1))
        A = random_unitary_symplectic(d, rng)
        out["hessian_K"].append(hessian_K_check(
            float(rng.uniform(0.5, 2.0)), rng.normal(size=2 * d), A, float(rng.normal())))
    return out
