import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twl.exceptions import DegenerateActionError, InfiniteStabilizerError, PreconditionError
from twl.geometry import AmbientPoint, fiber_rotate, heisenberg_chart, random_point, random_tangent
from twl.hardy import evaluate_sections, monomial_norms
from twl.symbols import parse_symbol
from twl.symmetry import (
    MOMENT_SIGN,
    CircleActionSpec,
    StabilizerInfo,
    a_gen,
    a_phi_varpi,
    a_T_varpi,
    check_symbol_invariance,
    effective_volume,
    hamiltonian_residual,
    isotype_basis,
    isotype_decomposition,
    moment_map,
    monomial_weights,
    random_point_on_zero_locus,
    stabilizer_jacobian,
    stabilizers,
    weight_of_monomial,
)

MODEL = (-1, 1)
EQUATOR = AmbientPoint(np.array([1, 1]) / math.sqrt(2))


def test_degenerate_actions_rejected():
    with pytest.raises(DegenerateActionError):
        CircleActionSpec((2, 2))
    with pytest.raises(PreconditionError):
        CircleActionSpec((1,))


def test_moment_map_model():
    assert abs(moment_map(MODEL, AmbientPoint(np.array([1.0, 0.0])))) == 1.0
    assert abs(moment_map(MODEL, EQUATOR)) < 1e-15


def test_moment_map_is_hamiltonian(rng):
    for p in ((-1, 1), (-1, 2, 0), (-2, 2, 1), (3, -1, 0, 1)):
        for _ in range(5):
            x = random_point(len(p) - 1, rng)
            v = random_tangent(x, rng)
            assert abs(hamiltonian_residual(p, x, v, MOMENT_SIGN)) < 1e-6


def test_moment_map_invariance(rng):
    spec = CircleActionSpec((-2, 2, 1))
    x = random_point(2, rng)
    phi = moment_map(spec, x)
    assert moment_map(spec, fiber_rotate(x, 1.1)) == pytest.approx(phi, abs=1e-15)
    for t in np.linspace(0, 2 * math.pi, 7):
        assert moment_map(spec, spec.act(x, t)) == pytest.approx(phi, abs=1e-12)


def test_weights_model():
    assert weight_of_monomial(MODEL, (3, 1)).varpi == 2
    b = monomial_norms(5, 1)
    assert sorted(monomial_weights(MODEL, b)) == list(range(-5, 6, 2))


def test_weight_equivariance(rng):
    spec = CircleActionSpec((-1, 2, 3))
    b = monomial_norms(4, 2)
    x = random_point(2, rng)
    phi = 0.37
    lhs = evaluate_sections(b.multi_indices, spec.act(x, -phi))
    rhs = np.exp(1j * monomial_weights(spec, b) * phi) * evaluate_sections(b.multi_indices, x)
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_isotype_basis():
    b = monomial_norms(3, 1)
    idx = isotype_basis(b, MODEL, 1)
    assert [tuple(b.multi_indices[i]) for i in idx] == [(2, 1)]
    assert isotype_basis(b, MODEL, 0).size == 0
    for k in (4, 9):
        blk = monomial_norms(k, 2)
        parts = isotype_decomposition(blk, (-2, 2, 1))
        assert sum(len(v) for v in parts.values()) == blk.dim


def test_symbol_invariance_check():
    check_symbol_invariance(parse_symbol("1 + 0.3*re_01*re_01 + 0.3*im_01*im_01"), MODEL)
    with pytest.raises(PreconditionError):
        check_symbol_invariance(parse_symbol("1 + 0.3*re_01"), MODEL)


def test_stabilizers_examples():
    st_ = stabilizers(MODEL, EQUATOR)
    assert (st_.order_M, st_.order_X, st_.index) == (2, 1, 2)
    st_ = stabilizers((0, 1), AmbientPoint.normalized([0.6, 0.8j]))
    assert (st_.order_M, st_.order_X) == (1, 1)
    st_ = stabilizers((-2, 2, 1), AmbientPoint(np.array([1, 1, 0]) / math.sqrt(2)))
    assert (st_.order_M, st_.order_X) == (4, 2)
    with pytest.raises(InfiniteStabilizerError):
        stabilizers((0, 1), AmbientPoint(np.array([1.0, 0.0])))


def test_effective_volumes_model():
    v = effective_volume(MODEL, EQUATOR)
    assert v.V_eff_X == pytest.approx(2 * math.pi, rel=1e-10)
    assert v.V_eff_M == pytest.approx(math.pi, rel=1e-10)
    assert v.detC == pytest.approx(2 * math.pi, rel=1e-10)


@pytest.mark.parametrize("p", [(-1, 1), (-1, 2, 0), (-2, 2, 1), (-1, -1, 1)])
def test_effective_volume_identities(p, rng):
    for _ in range(25):
        x = random_point_on_zero_locus(p, rng)
        st_ = stabilizers(p, x)
        v = effective_volume(p, x)
        assert st_.order_X * v.V_eff_X == pytest.approx(st_.order_M * v.V_eff_M, rel=1e-6)
        assert st_.order_M * v.V_eff_M == pytest.approx(v.detC, rel=1e-6)


def test_character_averages():
    trivial = StabilizerInfo(1, 1, (0.0,), (0.0,))
    z2 = StabilizerInfo(2, 2, (0.0, math.pi), (0.0, math.pi))
    assert a_phi_varpi(trivial, 7) == 1.0
    assert a_phi_varpi(z2, 4) == pytest.approx(1.0)
    assert a_phi_varpi(z2, 3) == pytest.approx(0.0, abs=1e-15)
    assert a_gen(MODEL, 5) == 1.0
    assert a_gen((-2, 2, 1), 1) == pytest.approx(1.0)


def test_a_T_model(rng):
    one = parse_symbol("1")
    for varpi in (0, 1, 5):
        assert a_T_varpi(EQUATOR, one, MODEL, varpi) == pytest.approx(1 / (math.sqrt(2) * math.pi))
    three = parse_symbol("3")
    assert a_T_varpi(EQUATOR, three, MODEL, 0) == pytest.approx(
        3 ** -1.5 / (math.sqrt(2) * math.pi))
    f = parse_symbol("1 + 0.2*w0*w1", d=1)
    vals = [a_T_varpi(random_point_on_zero_locus(MODEL, rng), f, MODEL, 1) for _ in range(10)]
    assert np.ptp(vals) < 1e-12
    with pytest.raises(PreconditionError):
        a_T_varpi(AmbientPoint(np.array([1.0, 0.0])), one, MODEL, 0)


def test_stabilizer_jacobian():
    x = AmbientPoint(np.array([1, 1, 0]) / math.sqrt(2))
    ch = heisenberg_chart(x)
    p = (-2, 2, 1)
    assert np.allclose(stabilizer_jacobian(ch, 0.0, p), np.eye(2), atol=1e-10)
    a = stabilizer_jacobian(ch, math.pi, p)
    assert np.allclose(a.conj().T @ a, np.eye(2), atol=1e-10)
    assert np.allclose(a, np.diag([1, -1]), atol=1e-8)
    with pytest.raises(PreconditionError):
        stabilizer_jacobian(ch, 1.0, p)
    assert stabilizers(MODEL, EQUATOR).angles_X == (0.0,)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=3, max_size=3).filter(
    lambda p: min(p) < 0 < max(p)), st.integers(0, 2**32 - 1))
def test_zero_locus_points_are_on_zero_locus(p, seed):
    x = random_point_on_zero_locus(p, np.random.default_rng(seed))
    assert abs(moment_map(p, x)) < 1e-12
