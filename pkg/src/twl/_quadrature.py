"""Quadrature rules on simplices, polytopes and tori."""

import itertools
import math

import numpy as np
from scipy.spatial import Delaunay
from scipy.special import roots_jacobi


def simplex_rule(dim, n):
    """Collapsed Gauss-Jacobi rule on ``{x >= 0, sum(x) <= 1}`` in ``R^dim``.

    Exact for polynomials of degree ``<= 2n - 1`` in each collapsed variable,
    hence for every polynomial of total degree ``<= 2n - 1``.

    Returns
    -------
    nodes : ndarray of shape (m, dim)
    weights : ndarray of shape (m,), summing to ``1 / dim!``
    """
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    factors = []
    for i in range(dim):
        a = dim - 1 - i
        x, w = roots_jacobi(n, a, 0.0)
        u = (1.0 + x) / 2.0
        factors.append((u, w / 2.0 ** (a + 1)))
    grids = np.meshgrid(*[f[0] for f in factors], indexing="ij")
    wgrids = np.meshgrid(*[f[1] for f in factors], indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    nodes = np.empty_like(u)
    remaining = np.ones(len(u))
    for i in range(dim):
        nodes[:, i] = remaining * u[:, i]
        remaining = remaining * (1.0 - u[:, i])
    return nodes, weights


def polytope_rule(vertices, n):
    """Quadrature on the convex hull of ``vertices`` (shape ``(v, dim)``).

    The hull is triangulated and :func:`simplex_rule` is mapped onto every
    cell, so exactness carries over from the reference rule.
    """
    vertices = np.asarray(vertices, dtype=float)
    dim = vertices.shape[1]
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    if dim == 1:
        lo, hi = vertices.min(), vertices.max()
        x, w = np.polynomial.legendre.leggauss(n)
        return (lo + (hi - lo) * (x + 1) / 2)[:, None], w * (hi - lo) / 2
    ref_nodes, ref_weights = simplex_rule(dim, n)
    tri = Delaunay(vertices)
    all_nodes, all_weights = [], []
    for simplex in tri.simplices:
        p = vertices[simplex]
        jac = (p[1:] - p[0]).T
        vol_factor = abs(np.linalg.det(jac))
        all_nodes.append(p[0] + ref_nodes @ jac.T)
        all_weights.append(ref_weights * vol_factor)
    return np.concatenate(all_nodes), np.concatenate(all_weights)


def torus_grid(dim, n):
    """Uniform trapezoid grid on ``[0, 2pi)^dim`` with unit total weight.

    Exact for trigonometric polynomials with frequencies ``|m| < n`` per
    angle.
    """
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    angles = 2 * np.pi * np.arange(n) / n
    grid = np.array(list(itertools.product(angles, repeat=dim)))
    return grid, np.full(len(grid), 1.0 / n**dim)


def sphere_rule(d, n_simplex, n_phase, fix_first_phase=True):
    """Quadrature for ``dV_X`` on the unit sphere ``S^{2d+1}``.

    Uses ``z_j = sqrt(w_j) exp(i theta_j)`` with ``w`` in the simplex; the
    pushforward of ``dV_X`` is ``pi^d d! dw`` (normalized to the simplex)
    times the uniform torus measure. With ``fix_first_phase`` the phase of
    ``z_0`` is pinned to zero, valid for structure-invariant integrands.

    Returns complex points of shape ``(m, d + 1)`` and weights summing to
    ``vol(X) = pi^d / d!``.
    """
    w_nodes, w_weights = simplex_rule(d, n_simplex)
    w_full = np.column_stack([1.0 - w_nodes.sum(axis=1), w_nodes])
    w_full = np.clip(w_full, 0.0, None)
    n_angles = d if fix_first_phase else d + 1
    t_nodes, t_weights = torus_grid(n_angles, n_phase)
    if fix_first_phase:
        t_nodes = np.column_stack([np.zeros(len(t_nodes)), t_nodes])
    z = np.sqrt(w_full)[:, None, :] * np.exp(1j * t_nodes)[None, :, :]
    weights = (w_weights[:, None] * t_weights[None, :]) * math.pi**d
    return z.reshape(-1, d + 1), weights.ravel()
