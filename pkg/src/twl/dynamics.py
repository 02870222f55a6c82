"""Conformal contact dynamics generated by a positive function on ``X``.

For ``varsigma > 0`` on ``X`` (possibly depending on the fiber angle) the
vector field is

``upsilon = upsilon_h - varsigma * (i z)``,

where the horizontal part is the ``2 omega``-dual of the horizontal
differential: ``d_h varsigma = 2 omega(upsilon_h, .)``. With
``omega(u, v) = g(i u, v)`` this gives ``upsilon_h = -(i/2) grad_h varsigma``.
Its flow satisfies ``phi_tau^* alpha = (varsigma o phi_tau / varsigma) alpha``.

Derivatives of ``varsigma`` are central differences of the extension
``varsigma(z / |z|)`` with step ``1e-4``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import PreconditionError, StepUnderflowError
from .geometry import (
    AmbientPoint,
    FD_STEP,
    TangentVectorX,
    as_point,
    fs_form_affine,
    horizontal_part,
    random_tangent,
)
from .symbols import parse_symbol

LOCAL_TOL = 1e-10
MIN_STEP = 1e-12
MAX_TAU = 10.0


def fiber_symbol(text, d=1):
    """Parse a positive symbol that may depend on the fiber angle
    (``rh_ij``/``ih_ij`` allowed)."""
    return parse_symbol(text, d=d, allow_fiber_dependent=True)


def _values(sym, z):
    return np.asarray(sym(z), dtype=float)


def _unit(z):
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def gradient(sym, z, h=FD_STEP):
    """Complex gradient ``G`` with ``d varsigma(v) = Re<v, G>`` on ``C^{d+1}``
    for the extension ``varsigma(z / |z|)``; rows of ``z`` are points."""
    z = np.atleast_2d(z)
    m, n = z.shape
    eye = np.eye(n)
    steps = np.concatenate([eye, 1j * eye]) * h
    pts = np.concatenate([z[:, None, :] + steps[None], z[:, None, :] - steps[None]], axis=1)
    vals = _values(sym, _unit(pts))
    diff = (vals[:, : 2 * n] - vals[:, 2 * n:]) / (2 * h)
    return diff[:, :n] + 1j * diff[:, n:]


def theta_derivative(sym, x, h=FD_STEP):
    """``d varsigma / d theta`` along the structure circle at ``x``."""
    z = as_point(x).z
    return float((_values(sym, np.exp(1j * h) * z) - _values(sym, np.exp(-1j * h) * z)) / (2 * h))


def _field(sym, z):
    """``upsilon`` at the rows of ``z`` (points of the sphere)."""
    z = np.atleast_2d(z)
    g = gradient(sym, z)
    gh = g - np.sum(np.conj(z) * g, axis=1, keepdims=True) * z
    return -0.5j * gh - _values(sym, z)[:, None] * 1j * z


def contact_field(sym, x):
    """The vector field ``upsilon`` at ``x`` as a tangent vector."""
    x = as_point(x)
    return TangentVectorX(_field(sym, x.z[None, :])[0], x)


def _field_derivative(sym, z, v, h=FD_STEP):
    """Directional derivative ``D upsilon (v)`` along tangent vectors ``v``
    (rows), by central differences along the normalized line."""
    v = np.atleast_2d(v)
    plus = _unit(z[None, :] + h * v)
    minus = _unit(z[None, :] - h * v)
    f = _field(sym, np.concatenate([plus, minus]))
    return (f[: len(v)] - f[len(v):]) / (2 * h)


def _alpha(z, v):
    return float(np.vdot(1j * z, v).real)


@dataclass(frozen=True)
class FlowState:
    x: AmbientPoint
    tau: float
    tangents: np.ndarray = None
    steps: int = 0


def _rhs(sym, y, n_tan):
    z = y[0]
    out = np.empty_like(y)
    out[0] = _field(sym, z[None, :])[0]
    if n_tan:
        out[1:] = _field_derivative(sym, z, y[1:])
    return out


def _rk4(sym, y, h, n_tan):
    k1 = _rhs(sym, y, n_tan)
    k2 = _rhs(sym, y + 0.5 * h * k1, n_tan)
    k3 = _rhs(sym, y + 0.5 * h * k2, n_tan)
    k4 = _rhs(sym, y + h * k3, n_tan)
    y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    y[0] /= np.linalg.norm(y[0])
    return y


def flow(sym, x0, tau, tangents=None, tol=LOCAL_TOL, h0=0.05):
    """Integrate ``upsilon`` from ``x0`` for time ``tau``.

    Classical Runge-Kutta with step doubling (local error below ``tol``);
    the point is renormalized to the sphere after every step. ``tangents``
    (rows) are transported by the variational equation.

    Raises
    ------
    StepUnderflowError
        If the step falls below ``1e-12``.
    """
    if abs(tau) > MAX_TAU:
        raise PreconditionError(f"|tau| must be <= {MAX_TAU}")
    x0 = as_point(x0)
    tan = np.zeros((0, x0.z.size), dtype=complex) if tangents is None else np.atleast_2d(
        np.asarray(tangents, dtype=complex))
    n_tan = len(tan)
    y = np.vstack([x0.z[None, :], tan])
    t, direction = 0.0, math.copysign(1.0, tau) if tau else 1.0
    h = min(h0, abs(tau)) if tau else 0.0
    steps = 0
    while abs(tau) - t > 1e-15:
        h = min(h, abs(tau) - t)
        full = _rk4(sym, y.copy(), direction * h, n_tan)
        half = _rk4(sym, _rk4(sym, y.copy(), direction * h / 2, n_tan), direction * h / 2, n_tan)
        err = float(np.max(np.abs(half - full))) / 15
        if err <= tol:
            y = half + (half - full) / 15
            y[0] /= np.linalg.norm(y[0])
            t += h
            steps += 1
        factor = 2.0 if err == 0 else min(2.0, max(0.2, 0.9 * (tol / err) ** 0.2))
        h *= factor
        if h < MIN_STEP:
            raise StepUnderflowError(f"step underflow at tau = {direction * t:.6g}")
    return FlowState(x=AmbientPoint(y[0]), tau=float(tau), tangents=y[1:] if n_tan else None,
                     steps=steps)


def reeb_flow(x, tau):
    """Closed-form flow of ``upsilon = -i z``: ``x e^{-i tau}``."""
    return AmbientPoint(as_point(x).z * np.exp(-1j * tau))


@dataclass(frozen=True)
class LieReport:
    """Residuals of the three Lie derivative identities at one point."""

    alpha_residual: float
    symbol_residual: float
    normalized_residual: float
    theta_derivative: float

    @property
    def max_residual(self):
        return max(self.alpha_residual, self.symbol_residual, self.normalized_residual)

    def passed(self, tol=1e-6):
        return self.max_residual < tol


def lie_derivative_alpha(sym, x, v):
    """``(L_upsilon alpha)(v) = Im<v, upsilon> + Im<D upsilon(v), z>``,
    the time derivative of ``alpha(d phi_t v)`` at ``t = 0``."""
    z = as_point(x).z
    ups = _field(sym, z[None, :])[0]
    dups = _field_derivative(sym, z, v[None, :])[0]
    return float(np.vdot(ups, v).imag + np.vdot(z, dups).imag)


def lie_identities_check(sym, x, rng=None, n_vectors=4, h=FD_STEP):
    """Check at ``x``: (i) ``L alpha = -(d_theta varsigma) alpha``;
    (ii) ``upsilon(varsigma) = -varsigma d_theta varsigma``;
    (iii) ``L (alpha / varsigma) = 0`` on random tangent vectors."""
    rng = np.random.default_rng(0) if rng is None else rng
    x = as_point(x)
    z = x.z
    s = float(_values(sym, z[None, :])[0])
    dth = theta_derivative(sym, x, h)
    ups = _field(sym, z[None, :])[0]
    pts = _unit(np.stack([z + h * ups, z - h * ups]))
    vals = _values(sym, pts)
    ups_s = float((vals[0] - vals[1]) / (2 * h))
    res_ii = abs(ups_s + s * dth)
    res_i = res_iii = 0.0
    for _ in range(n_vectors):
        v = random_tangent(x, rng)
        la = lie_derivative_alpha(sym, x, v)
        a = _alpha(z, v)
        res_i = max(res_i, abs(la + dth * a))
        res_iii = max(res_iii, abs(la / s - a * ups_s / s**2))
    return LieReport(alpha_residual=res_i, symbol_residual=res_ii,
                     normalized_residual=res_iii, theta_derivative=dth)


@dataclass(frozen=True)
class PullbackReport:
    residual: float
    factor: float
    steps: int

    def passed(self, tol=1e-6):
        return self.residual < tol


def pullback_check(sym, x, tau, rng=None, n_vectors=3):
    """Compare ``alpha(d phi_tau v)`` with ``varsigma(phi_tau x)/varsigma(x) alpha(v)``."""
    rng = np.random.default_rng(0) if rng is None else rng
    x = as_point(x)
    vs = np.array([random_tangent(x, rng) for _ in range(n_vectors)])
    st = flow(sym, x, tau, tangents=vs)
    factor = float(_values(sym, st.x.z[None, :])[0] / _values(sym, x.z[None, :])[0])
    res = max(abs(_alpha(st.x.z, w) - factor * _alpha(x.z, v)) for v, w in zip(vs, st.tangents))
    return PullbackReport(residual=float(res), factor=factor, steps=st.steps)


def hamiltonian_field_residual(sym, x, h=FD_STEP):
    """``|d pi(upsilon) - H|`` where ``d varsigma = 2 omega(H, .)`` is solved
    with the Fubini-Study form of the affine chart (fiber-invariant
    ``varsigma``)."""
    x = as_point(x)
    z = x.z
    n = z.size
    basis = []
    for j in range(n):
        for unit in (1.0, 1j):
            e = np.zeros(n, dtype=complex)
            e[j] = unit
            b = horizontal_part(z, e)
            if np.linalg.norm(b) > 1e-8:
                basis.append(b)
    # orthonormal real basis of the horizontal space
    q, r = np.linalg.qr(np.array([np.concatenate([b.real, b.imag]) for b in basis]).T)
    keep = np.abs(np.diag(r)) > 1e-8
    q = q[:, keep]
    basis = [c[:n] + 1j * c[n:] for c in q.T]
    om = np.array([[fs_form_affine(x, a, b) for b in basis] for a in basis])
    pts = _unit(np.array([z + h * b for b in basis] + [z - h * b for b in basis]))
    vals = _values(sym, pts)
    m = len(basis)
    ds = (vals[:m] - vals[m:]) / (2 * h)
    coef = np.linalg.solve(2 * om.T, ds)
    ham = sum(c * b for c, b in zip(coef, basis))
    ups_h = horizontal_part(z, _field(sym, z[None, :])[0])
    return float(np.linalg.norm(ups_h - ham))
