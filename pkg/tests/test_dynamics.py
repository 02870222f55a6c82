import math

import numpy as np
import pytest

from twl.exceptions import PreconditionError, StepUnderflowError
from twl.geometry import contact_form, random_point
from twl.dynamics import (
    contact_field,
    fiber_symbol,
    flow,
    hamiltonian_field_residual,
    lie_identities_check,
    pullback_check,
    reeb_flow,
    theta_derivative,
)

INVARIANT = "1 + 0.5*w1 + 0.3*re_01"
DEPENDENT = "1 + 0.25*rh_01"
INVARIANT_D2 = "2 + 0.3*ih_12 + 0.2*w0*w2 + 0.1*re_01"


def test_reeb_case(rng):
    one = fiber_symbol("1")
    x = random_point(1, rng)
    assert np.allclose(contact_field(one, x).v, -1j * x.z, atol=1e-12)
    st = flow(one, x, 2.5)
    assert np.allclose(st.x.z, reeb_flow(x, 2.5).z, atol=1e-10)


@pytest.mark.parametrize("text, d", [(INVARIANT, 1), (DEPENDENT, 1), (INVARIANT_D2, 2)])
def test_alpha_of_field(text, d, rng):
    sym = fiber_symbol(text, d)
    for _ in range(10):
        x = random_point(d, rng)
        assert contact_form(x, contact_field(sym, x).v) == pytest.approx(-float(sym(x.z)), abs=1e-12)


def test_fiber_dependence_detected(rng):
    x = random_point(1, rng)
    assert theta_derivative(fiber_symbol(INVARIANT), x) == pytest.approx(0, abs=1e-10)
    assert abs(theta_derivative(fiber_symbol(DEPENDENT), x)) > 1e-3


@pytest.mark.parametrize("text", ["1", INVARIANT])
def test_hamiltonian_projection(text, rng):
    sym = fiber_symbol(text)
    for _ in range(5):
        assert hamiltonian_field_residual(sym, random_point(1, rng)) < 1e-7


@pytest.mark.parametrize("text, d", [("1", 1), (INVARIANT, 1), (DEPENDENT, 1), (INVARIANT_D2, 2)])
def test_lie_identities(text, d, rng):
    sym = fiber_symbol(text, d)
    for _ in range(10):
        assert lie_identities_check(sym, random_point(d, rng), rng).passed(1e-6)


def test_lie_identity_reduces_for_invariant_symbol(rng):
    rep = lie_identities_check(fiber_symbol(INVARIANT), random_point(1, rng), rng)
    assert abs(rep.theta_derivative) < 1e-10 and rep.alpha_residual < 1e-7


@pytest.mark.parametrize("text, d", [("1", 1), (DEPENDENT, 1), (INVARIANT_D2, 2)])
def test_pullback(text, d, rng):
    sym = fiber_symbol(text, d)
    x = random_point(d, rng)
    rep = pullback_check(sym, x, 1.0, rng)
    assert rep.passed(1e-6)
    if text == "1":
        assert rep.factor == pytest.approx(1.0, abs=1e-12)
    rep0 = pullback_check(sym, x, 0.0, rng)
    assert rep0.residual == 0.0 and rep0.factor == 1.0


def test_reversibility(rng):
    sym = fiber_symbol(DEPENDENT)
    x = random_point(1, rng)
    back = flow(sym, flow(sym, x, 1.3).x, -1.3).x
    assert np.allclose(back.z, x.z, atol=1e-8)


def test_invariant_symbol_is_conserved(rng):
    sym = fiber_symbol(INVARIANT)
    x = random_point(1, rng)
    end = flow(sym, x, 5.0).x
    assert float(sym(end.z)) == pytest.approx(float(sym(x.z)), abs=1e-8)


def test_log_symbol_rate(rng):
    # d/dtau log f(phi_tau x) = -d_theta f(phi_tau x)
    sym = fiber_symbol(DEPENDENT)
    x = random_point(1, rng)
    h = 1e-3
    for tau in (0.2, 0.9):
        a = flow(sym, x, tau - h).x
        b = flow(sym, x, tau + h).x
        c = flow(sym, x, tau).x
        rate = (math.log(float(sym(b.z))) - math.log(float(sym(a.z)))) / (2 * h)
        assert rate == pytest.approx(-theta_derivative(sym, c), abs=1e-6)


def test_flow_guards(rng):
    sym = fiber_symbol("1")
    x = random_point(1, rng)
    with pytest.raises(PreconditionError):
        flow(sym, x, 11.0)
    with pytest.raises(StepUnderflowError):
        flow(sym, x, 1.0, tol=1e-30)
