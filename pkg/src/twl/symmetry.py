"""Hamiltonian circle actions ``z_j -> e^{i p_j phi} z_j`` on the model.

The action commutes with the structure circle and descends to ``M = CP^d``.
This module provides the moment map, the weight grading of ``H(X)``,
stabilizers of points, effective orbit volumes and the character averages
entering the equivariant asymptotics.

Signs of the moment map and of the monomial weights are not hard-coded:
both are calibrated at import by numeric self-tests (Hamiltonian identity
``d Phi = 2 omega(xi_M, .)`` and equivariance of sections).
"""

from dataclasses import dataclass
from functools import reduce
import math

import numpy as np
from scipy import integrate

from .exceptions import DegenerateActionError, InfiniteStabilizerError, PreconditionError
from .geometry import (
    AmbientPoint,
    FD_STEP,
    as_point,
    chart_point,
    fs_omega,
    orbit_direction,
    random_point,
    random_tangent,
    zero_locus_vertices,
)
from .hardy import evaluate_sections

SUPPORT_TOL = 1e-12
ZERO_LOCUS_TOL = 1e-8
INVARIANCE_TOL = 1e-10


@dataclass(frozen=True)
class CircleActionSpec:
    """Integer weights ``p`` of the circle action on ``C^{d+1}``."""

    weights: tuple

    def __post_init__(self):
        w = tuple(int(v) for v in self.weights)
        if any(int(v) != v for v in self.weights):
            raise PreconditionError("weights must be integers")
        if len(w) < 2:
            raise PreconditionError("need at least two weights")
        if len(set(w)) == 1:
            raise DegenerateActionError(
                "all weights are equal: the action reparametrizes the structure circle"
            )
        object.__setattr__(self, "weights", w)

    @property
    def d(self):
        return len(self.weights) - 1

    @property
    def p(self):
        return np.array(self.weights, dtype=float)

    def act(self, x, phi):
        """``mu^X_phi(x)``."""
        z = as_point(x).z
        return AmbientPoint(np.exp(1j * self.p * phi) * z)

    def generator(self, x):
        """``xi_X(x) = i p z``."""
        return 1j * self.p * as_point(x).z


@dataclass(frozen=True)
class IsotypeLabel:
    """Weight ``varpi`` of a circle representation (``dim V_varpi = 1``)."""

    varpi: int

    @property
    def dim(self):
        return 1

    def character(self, phi):
        return np.exp(1j * self.varpi * np.asarray(phi))


@dataclass(frozen=True)
class StabilizerInfo:
    """Finite stabilizers of a point of ``X`` and of its image in ``M``.

    ``angles_X`` / ``angles_M`` list the elements as angles in ``[0, 2pi)``.
    """

    order_M: int
    order_X: int
    angles_X: tuple
    angles_M: tuple

    @property
    def index(self):
        return self.order_M // self.order_X


@dataclass(frozen=True)
class EffectiveVolumes:
    V_eff_M: float
    V_eff_X: float
    detC: float


def _as_spec(p):
    return p if isinstance(p, CircleActionSpec) else CircleActionSpec(tuple(p))


def _raw_moment(p, z):
    return np.sum(np.asarray(p, dtype=float) * np.abs(z) ** 2, axis=-1)


def hamiltonian_residual(p, x, v, sign, h=FD_STEP):
    """``d Phi(v) - 2 omega(xi_M, v)`` by central differences, for
    ``Phi = sign * sum p_j |z_j|^2``."""
    z = as_point(x).z
    v = np.asarray(v, dtype=complex)

    def phi(t):
        zz = z + t * v
        return sign * _raw_moment(p, zz / np.linalg.norm(zz))

    dphi = (phi(h) - phi(-h)) / (2 * h)
    return float(dphi - 2 * fs_omega(x, orbit_direction(p, x), v))


def _calibrate_moment_sign():
    rng = np.random.default_rng(12345)
    p = (-1, 2, 0)
    x = random_point(2, rng)
    v = random_tangent(x, rng)
    res = {s: abs(hamiltonian_residual(p, x, v, s)) for s in (1, -1)}
    sign = min(res, key=res.get)
    if res[sign] > 1e-6:
        raise RuntimeError("moment map sign self-test failed")
    return sign


def _calibrate_weight_sign():
    # evaluate_section(alpha, mu_{phi}^{-1}(x)) = e^{i varpi phi} evaluate_section(alpha, x)
    rng = np.random.default_rng(54321)
    spec = CircleActionSpec((-1, 2, 3))
    x = random_point(2, rng)
    alpha = np.array([[2, 1, 1]])
    phi = 0.3
    ratio = evaluate_sections(alpha, spec.act(x, -phi))[0] / evaluate_sections(alpha, x)[0]
    raw = float(np.dot(spec.p, alpha[0]))
    return int(round(np.angle(ratio) / (phi * raw)))


MOMENT_SIGN = _calibrate_moment_sign()
WEIGHT_SIGN = _calibrate_weight_sign()


def moment_map(p, x):
    """``Phi(x) = s sum p_j |z_j|^2`` with the self-tested sign ``s``.

    Accepts a point or an array of points (last axis of length ``d+1``).
    """
    z = x.z if isinstance(x, AmbientPoint) else np.asarray(x, dtype=complex)
    return MOMENT_SIGN * _raw_moment(_as_spec(p).weights, z)


def weight_of_monomial(p, alpha):
    """Isotype of ``z^alpha`` under the pullback action ``f -> f o mu_{-phi}``."""
    return IsotypeLabel(int(WEIGHT_SIGN * np.dot(_as_spec(p).weights, np.asarray(alpha))))


def monomial_weights(p, block):
    """Weights of all monomials of a :class:`~twl.hardy.HardyBlock`."""
    return WEIGHT_SIGN * (block.multi_indices @ np.asarray(_as_spec(p).weights, dtype=np.int64))


def isotype_basis(block, p, varpi):
    """Indices of the monomials of ``block`` with weight ``varpi``."""
    return np.nonzero(monomial_weights(p, block) == int(varpi))[0]


def isotype_decomposition(block, p):
    """``{varpi: indices}`` for every weight occurring in ``block``."""
    w = monomial_weights(p, block)
    return {int(v): np.nonzero(w == v)[0] for v in np.unique(w)}


def check_symbol_invariance(f, p, rng=None, n=64, tol=INVARIANCE_TOL):
    """Sampled check that ``f o mu_phi = f``; raises ``PreconditionError``."""
    spec = _as_spec(p)
    rng = np.random.default_rng(0) if rng is None else rng
    z = rng.normal(size=(n, spec.d + 1)) + 1j * rng.normal(size=(n, spec.d + 1))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    phi = rng.uniform(0, 2 * np.pi, size=(n, 1))
    moved = np.exp(1j * spec.p * phi) * z
    err = float(np.max(np.abs(f(moved) - f(z))))
    if err > tol:
        raise PreconditionError(
            f"symbol {f.text!r} is not invariant under weights {spec.weights} (defect {err:.2e})"
        )
    return err


def stabilizers(p, x):
    """Stabilizers ``G^X_x`` and ``G^M_m`` of ``x`` and ``m = pi(x)``.

    ``G^X``: ``e^{i p_j phi} = 1`` on the support of ``x``;
    ``G^M``: ``e^{i p_j phi}`` equal to a common phase on the support.
    Every returned angle is checked to act as claimed.
    """
    spec = _as_spec(p)
    x = as_point(x)
    support = np.nonzero(np.abs(x.z) > SUPPORT_TOL)[0]
    ps = [abs(spec.weights[j]) for j in support]
    diffs = [abs(spec.weights[j] - spec.weights[support[0]]) for j in support]
    g_x = reduce(math.gcd, ps, 0)
    g_m = reduce(math.gcd, diffs, 0)
    if g_x == 0 or g_m == 0:
        raise InfiniteStabilizerError("the point is fixed by the circle action")
    angles_x = tuple(2 * math.pi * n / g_x for n in range(g_x))
    angles_m = tuple(2 * math.pi * n / g_m for n in range(g_m))
    for a in angles_x:
        assert np.allclose(spec.act(x, a).z, x.z, atol=1e-12)
    for a in angles_m:
        ratio = spec.act(x, a).z[support] / x.z[support]
        assert np.allclose(ratio, ratio[0], atol=1e-12)
    return StabilizerInfo(order_M=g_m, order_X=g_x, angles_X=angles_x, angles_M=angles_m)


def effective_volume(p, x):
    """Riemannian lengths of the orbits through ``x`` and ``m = pi(x)``.

    Orbit speeds are integrated over one primitive period. ``detC`` is the
    Riemannian density of the Haar-mass-one generator ``2 pi d/dphi`` on
    ``M``, computed from the speed at ``m`` independently of the periods.
    """
    spec = _as_spec(p)
    x = as_point(x)
    st = stabilizers(spec, x)

    def speed_x(phi):
        return np.linalg.norm(spec.generator(spec.act(x, phi)))

    def speed_m(phi):
        return np.linalg.norm(orbit_direction(spec.weights, spec.act(x, phi)))

    v_x = integrate.quad(speed_x, 0, 2 * math.pi / st.order_X, epsabs=1e-13, epsrel=1e-12)[0]
    v_m = integrate.quad(speed_m, 0, 2 * math.pi / st.order_M, epsabs=1e-13, epsrel=1e-12)[0]
    det_c = 2 * math.pi * np.linalg.norm(orbit_direction(spec.weights, x))
    if det_c < 1e-12:
        raise DegenerateActionError("the action is not locally free at the point")
    return EffectiveVolumes(V_eff_M=float(v_m), V_eff_X=float(v_x), detC=float(det_c))


def a_phi_varpi(stab, varpi):
    """Character average ``(1/|G^X|) sum_g chi_varpi(g)`` (real)."""
    vals = np.exp(1j * varpi * np.asarray(stab.angles_X))
    mean = vals.mean()
    assert abs(mean.imag) < 1e-12
    return float(mean.real)


def random_point_on_zero_locus(p, rng):
    """A random point of ``X' = pi^{-1}(Phi^{-1}(0))``.

    ``|z_j|^2`` is a random convex combination of the vertices of the zero
    locus in the simplex; phases are uniform.
    """
    spec = _as_spec(p)
    verts = zero_locus_vertices(spec.weights)
    lam = rng.dirichlet(np.ones(len(verts)))
    w = lam @ verts
    theta = rng.uniform(0, 2 * np.pi, size=spec.d + 1)
    return AmbientPoint.normalized(np.sqrt(w) * np.exp(1j * theta))


def a_gen(p, varpi, rng=None, n=32):
    """Generic value of ``a_{Phi, varpi}`` on ``M'`` by sampling.

    Returns the most frequent sampled value.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    vals = [round(a_phi_varpi(stabilizers(p, random_point_on_zero_locus(p, rng)), varpi), 10)
            for _ in range(n)]
    uniq, counts = np.unique(vals, return_counts=True)
    return float(uniq[np.argmax(counts)])


def on_zero_locus(p, x, tol=ZERO_LOCUS_TOL):
    return abs(float(moment_map(p, x))) <= tol


def a_T_varpi(x, f, p, varpi, e=1):
    """``A^T_varpi(x) = 2^{e/2} dim V_varpi / V_eff_X * f(x)^{-(d + 1 - e/2)}``."""
    spec = _as_spec(p)
    x = as_point(x)
    if not on_zero_locus(spec, x):
        raise PreconditionError("x is not on the zero locus of the moment map")
    vols = effective_volume(spec, x)
    s = float(f(x.z))
    return 2 ** (e / 2) * IsotypeLabel(varpi).dim / vols.V_eff_X * s ** (-(spec.d + 1 - e / 2))


def stabilizer_jacobian(chart, g, p, h=FD_STEP):
    """Matrix of ``d mu_g`` at the chart center in the ``w`` coordinates.

    Computed by central differences of ``w -> chart^{-1}(mu_g(chart(0, w)))``
    along ``Re w_j`` and ``Im w_j``; the result must be complex linear and
    unitary within ``1e-10``.
    """
    spec = _as_spec(p)
    x = chart.center
    if not np.allclose(spec.act(x, g).z, x.z, atol=1e-12):
        raise PreconditionError("g does not stabilize the chart center")
    d = chart.d

    def image(w):
        return chart.inverse(spec.act(chart_point(chart, 0.0, w), g).z)[1]

    cols_re, cols_im = [], []
    for j in range(d):
        e = np.zeros(d, dtype=complex)
        e[j] = h
        cols_re.append((image(e) - image(-e)) / (2 * h))
        cols_im.append((image(1j * e) - image(-1j * e)) / (2 * h))
    a = np.column_stack(cols_re)
    antilinear = np.max(np.abs(np.column_stack(cols_im) - 1j * a))
    unitary = np.max(np.abs(a.conj().T @ a - np.eye(d)))
    if antilinear > 1e-10 or unitary > 1e-10:
        raise PreconditionError(
            f"stabilizer Jacobian is not unitary (defects {antilinear:.2e}, {unitary:.2e})"
        )
    return a
