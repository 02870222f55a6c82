"""Contact and Kahler geometry of the model ``X = S^{2d+1} -> M = CP^d``.

Conventions
-----------
Points of ``X`` are unit vectors ``z`` in ``C^{d+1}``; the Hermitian pairing
is ``<u, v> = sum(u_j * conj(v_j))``. The contact form is
``alpha_z(v) = Re<v, i z>``, the structure circle acts by ``z -> e^{i t} z``
with generator ``i z``, and horizontal vectors are those complex-orthogonal
to ``z``. On horizontal vectors the Fubini-Study data are ``g = Re<u, v>``
and ``omega(u, v) = g(J u, v) = Im<v, u>``, so that ``d alpha = 2 omega``
and ``CP^1`` has area ``pi``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import integrate

from .exceptions import DegenerateActionError, OutOfChartError, PreconditionError

NORM_TOL = 1e-12
CHART_RADIUS = 1.0
FD_STEP = 1e-4

# Orientation of omega relative to J in the chart coordinates; the near
# diagonal Szego model e^{psi_2} is matched with this sign.
OMEGA_SIGN = 1


def _readonly(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AmbientPoint:
    """A point of the unit sphere ``X`` in ``C^{d+1}``."""

    z: np.ndarray

    def __post_init__(self):
        z = _readonly(self.z)
        if z.ndim != 1 or z.size < 2:
            raise PreconditionError("z must be a complex vector of length d+1 >= 2")
        if abs(np.linalg.norm(z) - 1.0) > NORM_TOL:
            raise PreconditionError(f"|z| = {np.linalg.norm(z)!r} is not 1")
        object.__setattr__(self, "z", z)

    @classmethod
    def normalized(cls, z):
        z = np.asarray(z, dtype=complex)
        return cls(z / np.linalg.norm(z))

    @property
    def d(self):
        return self.z.size - 1

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.z, dtype=dtype)


@dataclass(frozen=True)
class TangentVectorX:
    """A tangent vector ``v`` to ``X`` at ``base``."""

    v: np.ndarray
    base: AmbientPoint

    def __post_init__(self):
        v = _readonly(self.v)
        if v.shape != self.base.z.shape:
            raise PreconditionError("tangent vector has the wrong length")
        scale = max(1.0, float(np.linalg.norm(v)))
        if abs(np.vdot(self.base.z, v).real) > NORM_TOL * scale:
            raise PreconditionError("vector is not tangent to the sphere")
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class HeisenbergChart:
    """Heisenberg local chart ``(theta, w) -> e^{i theta} U (1, w) / |(1, w)|``.

    ``frame`` is unitary with first column equal to ``center``.
    """

    center: AmbientPoint
    frame: np.ndarray
    radius: float = CHART_RADIUS

    def __post_init__(self):
        object.__setattr__(self, "frame", _readonly(self.frame))

    @property
    def d(self):
        return self.center.d

    def to_ambient(self, w):
        """Horizontal ambient vector at the center for chart direction ``w``."""
        return self.frame[:, 1:] @ np.asarray(w, dtype=complex)

    def from_ambient(self, v):
        """Chart coordinates ``(theta', w)`` of an ambient tangent vector."""
        c = self.frame.conj().T @ np.asarray(v, dtype=complex)
        return c[0].imag, c[1:]

    def inverse(self, x):
        """Chart coordinates ``(theta, w)`` of a point near the center."""
        c = self.frame.conj().T @ np.asarray(x, dtype=complex)
        if abs(c[0]) < 1e-14:
            raise OutOfChartError("point is antipodal to the chart domain")
        return float(np.angle(c[0])), c[1:] / c[0]


@dataclass(frozen=True)
class TangentSplit:
    """Splitting ``v = hor + ver + trasv`` of a tangent vector along ``M'``.

    All three components are ambient horizontal vectors at ``base``;
    ``ver_coord`` and ``trasv_coord`` are their coordinates along the unit
    vectors ``xi_M / |xi_M|`` and ``J xi_M / |xi_M|``.
    """

    hor: np.ndarray
    ver: np.ndarray
    trasv: np.ndarray
    ver_coord: np.ndarray
    trasv_coord: np.ndarray
    base: AmbientPoint = field(repr=False)


def as_point(x):
    return x if isinstance(x, AmbientPoint) else AmbientPoint(np.asarray(x, dtype=complex))


def random_point(d, rng):
    """Uniformly distributed point of ``S^{2d+1}``."""
    z = rng.normal(size=d + 1) + 1j * rng.normal(size=d + 1)
    return AmbientPoint.normalized(z)


def reeb_vector(x):
    """Generator ``d/dtheta = i z`` of the structure circle action at ``x``."""
    return 1j * as_point(x).z


def horizontal_part(x, v):
    z = as_point(x).z
    v = np.asarray(v, dtype=complex)
    return v - np.vdot(z, v) * z


def random_tangent(x, rng, horizontal=False):
    x = as_point(x)
    v = rng.normal(size=x.z.size) + 1j * rng.normal(size=x.z.size)
    if horizontal:
        return horizontal_part(x, v)
    return v - np.vdot(x.z, v).real * x.z


def contact_form(x, v):
    """``alpha_x(v) = Re<v, i z>`` for a tangent vector ``v`` at ``x``."""
    x = as_point(x)
    if isinstance(v, TangentVectorX):
        v = v.v
    else:
        v = TangentVectorX(v, x).v
    return float(np.vdot(1j * x.z, v).real)


def _alpha_ambient(z, v):
    # alpha extended to all of C^{d+1}; restricts to the contact form on X
    return np.vdot(1j * z, v).real


def fs_metric(x, u, v):
    """Fubini-Study inner product of the horizontal parts of ``u`` and ``v``."""
    return float(np.vdot(horizontal_part(x, v), horizontal_part(x, u)).real)


def fs_omega(x, u, v):
    """Fubini-Study symplectic form on the horizontal parts of ``u``, ``v``."""
    hu, hv = horizontal_part(x, u), horizontal_part(x, v)
    return OMEGA_SIGN * float(np.vdot(hu, hv).imag)


def d_alpha_fd(x, u, v, h=FD_STEP):
    """Exterior derivative ``d alpha(u, v)`` by central differences.

    Uses ``d alpha(U, V) = U(alpha(V)) - V(alpha(U))`` for the constant
    ambient extensions of ``u`` and ``v`` (their bracket vanishes).
    """
    z = as_point(x).z
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    du = (_alpha_ambient(z + h * u, v) - _alpha_ambient(z - h * u, v)) / (2 * h)
    dv = (_alpha_ambient(z + h * v, u) - _alpha_ambient(z - h * v, u)) / (2 * h)
    return float(du - dv)


def fs_form_affine(x, u, v):
    """``pi^* omega_FS(u, v)`` computed in the affine chart ``zeta = z'/z_j``.

    The affine chart is centered on the largest coordinate of ``x``; the
    Kahler form there is ``(i/2) d d-bar log(1 + |zeta|^2)``.
    """
    z = as_point(x).z
    j = int(np.argmax(np.abs(z)))
    rest = [i for i in range(z.size) if i != j]
    zeta = z[rest] / z[j]

    def dzeta(t):
        t = np.asarray(t, dtype=complex)
        return (t[rest] * z[j] - z[rest] * t[j]) / z[j] ** 2

    a, b = dzeta(u), dzeta(v)
    s = 1.0 + np.vdot(zeta, zeta).real
    h = (np.eye(len(rest)) * s - np.outer(zeta.conj(), zeta)) / s**2
    return float(-np.imag(a @ h @ b.conj()))


def heisenberg_chart(x):
    """Heisenberg chart centered at ``x``.

    The frame is the Gram-Schmidt completion of ``x`` by the standard basis,
    skipping the first basis vector parallel to ``x``.
    """
    x = as_point(x)
    n = x.z.size
    cols = [x.z]
    for j in range(n):
        if len(cols) == n:
            break
        r = np.zeros(n, dtype=complex)
        r[j] = 1.0
        for _ in range(2):
            r = r - sum(np.vdot(c, r) * c for c in cols)
        if np.linalg.norm(r) < 1e-8:
            continue
        cols.append(r / np.linalg.norm(r))
    frame = np.column_stack(cols)
    return HeisenbergChart(center=x, frame=frame)


def chart_point(chart, theta, w):
    """The point ``x + (theta, w)`` of the chart."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if w.shape != (chart.d,):
        raise PreconditionError(f"w must have length {chart.d}")
    nw = float(np.linalg.norm(w))
    if nw >= chart.radius:
        raise OutOfChartError(f"|w| = {nw:.3g} exceeds chart radius {chart.radius}")
    c = np.concatenate([[1.0 + 0j], w]) / math.sqrt(1.0 + nw**2)
    return AmbientPoint.normalized(np.exp(1j * theta) * (chart.frame @ c))


def fiber_rotate(x, angle):
    return AmbientPoint.normalized(np.exp(1j * angle) * as_point(x).z)


def connection_potential(chart, w, h=FD_STEP):
    """Coefficients ``A_j`` of the pulled-back contact form at ``x + w``.

    ``alpha = d theta + sum(A_j dw_j + conj(A_j) d conj(w_j))``, so
    ``A_j = (alpha(d/dRe w_j) - i alpha(d/dIm w_j)) / 2``; both directional
    values are obtained by central differences of the chart map.
    """
    w = np.asarray(w, dtype=complex)
    z = chart_point(chart, 0.0, w).z
    out = np.empty(chart.d, dtype=complex)
    for j in range(chart.d):
        e = np.zeros(chart.d, dtype=complex)
        e[j] = 1.0
        dre = (chart_point(chart, 0.0, w + h * e).z - chart_point(chart, 0.0, w - h * e).z) / (2 * h)
        dim = (chart_point(chart, 0.0, w + 1j * h * e).z - chart_point(chart, 0.0, w - 1j * h * e).z) / (2 * h)
        out[j] = (_alpha_ambient(z, dre) - 1j * _alpha_ambient(z, dim)) / 2
    return out


def chart_frame_gram(chart, h=FD_STEP):
    """Fubini-Study Gram matrix of the chart's real coordinate frame at 0.

    The ``2d`` real directions ``Re w_1, Im w_1, ...`` are pushed forward by
    central differences; a unitary chart gives the identity.
    """
    d = chart.d
    vecs = []
    for j in range(d):
        for unit in (1.0, 1j):
            e = np.zeros(d, dtype=complex)
            e[j] = unit * h
            vecs.append((chart_point(chart, 0.0, e).z - chart_point(chart, 0.0, -e).z) / (2 * h))
    x = chart.center
    return np.array([[fs_metric(x, a, b) for b in vecs] for a in vecs])


def _generator(weights, z):
    return 1j * np.asarray(weights, dtype=float) * z


def _moment_abs(weights, z):
    return abs(float(np.dot(np.asarray(weights, dtype=float), np.abs(z) ** 2)))


def orbit_direction(weights, x):
    """``xi_M(m)``: horizontal part of the circle generator ``i p z``."""
    return horizontal_part(x, _generator(weights, as_point(x).z))


def tangent_split(x, v, weights, tol=1e-8):
    """Split a horizontal vector at ``x`` in ``X'`` into hor/ver/trasv parts.

    ``ver`` is the projection on ``span(xi_M)``, ``trasv`` on
    ``span(J xi_M)`` (the normal direction to ``M'``) and ``hor`` is the
    remainder, a complex subspace.
    """
    x = as_point(x)
    if _moment_abs(weights, x.z) > tol:
        raise PreconditionError("base point is not on the zero locus of the moment map")
    xi = orbit_direction(weights, x)
    n = np.linalg.norm(xi)
    if n < 1e-12:
        raise DegenerateActionError("the action has a fixed point at the base point")
    u_ver = xi / n
    u_tr = 1j * u_ver
    v = horizontal_part(x, v)
    c_ver = np.vdot(u_ver, v).real
    c_tr = np.vdot(u_tr, v).real
    ver = c_ver * u_ver
    trasv = c_tr * u_tr
    return TangentSplit(
        hor=v - ver - trasv,
        ver=ver,
        trasv=trasv,
        ver_coord=np.array([c_ver]),
        trasv_coord=np.array([c_tr]),
        base=x,
    )


def moment_gradient_norm(weights):
    """Typical ``|d Phi|`` along ``X'``: ``2 sqrt(sum p_j^2 w_j)`` at the
    barycentre of the zero locus of ``sum p_j |z_j|^2`` in the simplex."""
    p = np.asarray(weights, dtype=float)
    verts = zero_locus_vertices(p)
    w = verts.mean(axis=0)
    return 2.0 * math.sqrt(float(np.dot(p**2, w)))


def zero_locus_vertices(weights):
    """Vertices (barycentric ``w``) of ``{sum p_j w_j = 0}`` in the simplex."""
    p = np.asarray(weights, dtype=float)
    n = p.size
    verts = []
    for j in range(n):
        if p[j] == 0:
            e = np.zeros(n)
            e[j] = 1.0
            verts.append(e)
    for i in range(n):
        for j in range(n):
            if p[i] < 0 < p[j]:
                e = np.zeros(n)
                e[i] = p[j] / (p[j] - p[i])
                e[j] = -p[i] / (p[j] - p[i])
                verts.append(e)
    if not verts:
        raise DegenerateActionError("0 is not attained by the moment map")
    return np.array(verts)


def dist_to_zero_locus(x, weights):
    """Distance proxy ``|Phi(pi(x))| / |d Phi|`` to ``X'``.

    ``|d Phi|`` is the constant of :func:`moment_gradient_norm`, so the
    proxy is a fixed multiple of ``|Phi|``.
    """
    return _moment_abs(weights, as_point(x).z) / moment_gradient_norm(weights)


def fs_volume_density(zeta, h=FD_STEP):
    """Riemannian volume density of ``CP^d`` in the affine chart at ``zeta``.

    The affine coordinate frame is pushed to the sphere through
    ``z = (1, zeta) / |(1, zeta)|`` by central differences and the
    Fubini-Study Gram determinant is taken.
    """
    zeta = np.asarray(zeta, dtype=complex)
    d = zeta.size

    def lift(t):
        v = np.concatenate([[1.0 + 0j], t])
        return v / np.linalg.norm(v)

    z = lift(zeta)
    vecs = []
    for j in range(d):
        for unit in (1.0, 1j):
            e = np.zeros(d, dtype=complex)
            e[j] = unit * h
            vecs.append((lift(zeta + e) - lift(zeta - e)) / (2 * h))
    gram = np.array([[fs_metric(z, a, b) for b in vecs] for a in vecs])
    return math.sqrt(max(np.linalg.det(gram), 0.0))


def volume_x_quadrature(d):
    """``vol(X)`` from ``dV_X = (1/2pi) alpha ^ pi^* dV_M`` by quadrature.

    ``vol(M)`` is integrated radially in the affine chart (the density is
    ``U(d)``-invariant) and the fiber integral of ``alpha`` is integrated
    along the structure orbit.
    """
    sphere_area = 2 * math.pi**d / math.gamma(d)

    def radial(r):
        zeta = np.zeros(d, dtype=complex)
        zeta[0] = r
        return fs_volume_density(zeta) * r ** (2 * d - 1)

    vol_m = sphere_area * integrate.quad(radial, 0, np.inf, limit=200, epsabs=1e-10, epsrel=1e-9)[0]
    x = AmbientPoint(np.eye(d + 1, dtype=complex)[0])
    fiber = integrate.quad(lambda t: contact_form(fiber_rotate(x, t), reeb_vector(fiber_rotate(x, t))), 0, 2 * math.pi)[0]
    return fiber * vol_m / (2 * math.pi)
