import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twl.asymptotics import (
    Prediction,
    WeylLaw,
    gamma_integral,
    hessian_K,
    hessian_K_check,
    hessian_suite,
    hessian_upsilon_check,
    predicted_counting,
    predicted_kernel_diag,
    predicted_kernel_offdiag,
    predicted_trace,
    q0_leading_amplitude,
    q_h,
    q_vt,
    random_unitary_symplectic,
    sigma_hat_volume,
    signature_lemma_check,
    volume_form_counting,
    weyl_parameters,
)
from twl.geometry import AmbientPoint, heisenberg_chart, orbit_direction, tangent_split
from twl.spectral import compute_spectrum, counting
from twl.symbols import parse_symbol

MODEL = (-1, 1)
EQUATOR = AmbientPoint(np.array([1, 1]) / math.sqrt(2))


def test_gamma_oracles():
    assert gamma_integral("1", MODEL) == pytest.approx(0.5, abs=1e-12)
    assert gamma_integral("1", None, d=1) == pytest.approx(math.pi, rel=1e-12)
    # pi int_0^1 (1 + w/2)^{-2} dw = 2 pi / 3
    assert gamma_integral("1 + 0.5*w1", None, d=1) == pytest.approx(2 * math.pi / 3, rel=1e-10)
    g, err = gamma_integral("1", MODEL, return_error=True)
    assert err < 1e-12


@pytest.mark.parametrize("p, expected", [((-1, 2, 0), math.pi / 3), ((-2, 2, 1), math.pi / 6),
                                         ((-1, -1, 1), math.pi / 4)])
def test_gamma_d2(p, expected):
    assert gamma_integral("1", p) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("p", [(-1, 2, 0), (-1, -1, 1)])
def test_gamma_d2_against_brute_force_count(p):
    # f = 1: N^(0)(lambda) / (pi/2 Gamma (lambda/pi)^2) -> 1 with an O(1/lambda) gap
    lam = 500
    rec = compute_spectrum("1", p, lam, isotypes=(0,))
    params = weyl_parameters("1", p, 0)
    assert counting(rec, lam, 0) / predicted_counting(params, lam) == pytest.approx(1, abs=0.02)


def test_gamma_homogeneity():
    f = parse_symbol("1 + 0.5*w1 + 0.3*w0*w1", d=1)
    g3 = parse_symbol("3 + 1.5*w1 + 0.9*w0*w1", d=1)
    assert gamma_integral(g3) == pytest.approx(3.0**-2 * gamma_integral(f), rel=1e-10)
    f = parse_symbol("1 + 0.2*w0*w1", d=1)
    g = parse_symbol("2 + 0.4*w0*w1", d=1)
    assert gamma_integral(g, MODEL) == pytest.approx(0.5 * gamma_integral(f, MODEL), rel=1e-10)


def test_predictions_model():
    eq = weyl_parameters("1", MODEL, 1)
    free = weyl_parameters("1", None, d=1)
    lam = np.array([100.0, 250.0])
    assert np.allclose(predicted_counting(eq, lam), lam / 2)
    assert np.allclose(predicted_counting(free, lam), lam**2 / 2)
    assert np.allclose(predicted_trace(eq, lam), math.pi)
    assert np.allclose(predicted_trace(free, lam), 2 * math.pi * lam)
    assert sigma_hat_volume(eq) == pytest.approx(math.pi)
    assert sigma_hat_volume(free) == pytest.approx(2 * math.pi**2)
    assert Prediction("counting", free)(10.0) == pytest.approx(50.0)
    with pytest.raises(ValueError):
        Prediction("bogus", free)(1.0)


@pytest.mark.parametrize("text, d, p", [("1", 1, None), ("1 + 0.5*w1", 1, None),
                                        ("2 + 0.2*w0*w2", 2, None), ("1", 1, MODEL),
                                        ("1 + 0.3*w0*w1", 1, MODEL), ("1", 2, (-2, 2, 1))])
def test_volume_form_matches_counting(text, d, p):
    params = weyl_parameters(text, p, 0, d=d)
    lam = np.linspace(10, 500, 7)
    assert np.allclose(volume_form_counting(params, lam), predicted_counting(params, lam), rtol=1e-12)


def test_quadratic_exponents():
    one = parse_symbol("1")
    xi = orbit_direction(MODEL, EQUATOR)
    t = 1j * xi / np.linalg.norm(xi)
    zero = tangent_split(EQUATOR, np.zeros(2, dtype=complex), MODEL)
    assert q_h(one, EQUATOR, zero, zero) == 0 and q_vt(one, EQUATOR, zero, zero) == 0
    sp = tangent_split(EQUATOR, 0.7 * t, MODEL)
    assert q_h(one, EQUATOR, sp, sp) == 0
    assert q_vt(one, EQUATOR, sp, sp) == pytest.approx(-2 * 0.49)
    three = parse_symbol("3")
    sp2 = tangent_split(EQUATOR, 0.3 * xi + 0.2 * t, MODEL)
    assert q_vt(three, EQUATOR, sp, sp2) == pytest.approx(q_vt(one, EQUATOR, sp, sp2) / 3)
    assert q_vt(one, EQUATOR, sp, sp2).real <= 0


def test_quadratic_exponents_d2(rng):
    p = (-2, 2, 1)
    x = AmbientPoint(np.array([1, 1, 0]) / math.sqrt(2))
    f = parse_symbol("1 + 0.3*w0*w1", d=2)
    for _ in range(10):
        a, b = (tangent_split(x, v - np.vdot(x.z, v) * x.z, p) for v in
                (rng.normal(size=3) + 1j * rng.normal(size=3) for _ in range(2)))
        assert q_h(f, x, a, b).real <= 0 and q_vt(f, x, a, b).real <= 0


def test_kernel_predictions_model():
    params = weyl_parameters("1", MODEL, 1)
    lam = 400.0
    diag = predicted_kernel_diag(params, EQUATOR, 0.0, lam, 1)
    assert diag == pytest.approx(math.sqrt(2) * math.sqrt(lam / math.pi))
    assert predicted_kernel_diag(params, EQUATOR, 1.0, lam, 1) / diag == pytest.approx(math.exp(-2))
    assert predicted_kernel_diag(params, EQUATOR, 0.0, 4 * lam, 1) / diag == pytest.approx(2)
    ch = heisenberg_chart(EQUATOR)
    xi = orbit_direction(MODEL, EQUATOR)
    w_t = ch.from_ambient(1j * xi / np.linalg.norm(xi))[1] * 0.6
    off = predicted_kernel_offdiag(params, EQUATOR, (0.0, w_t), (0.0, w_t), lam, 1)
    assert off == pytest.approx(predicted_kernel_diag(params, EQUATOR, 0.6, lam, 1))
    off = predicted_kernel_offdiag(params, EQUATOR, (0.3, np.zeros(1)), (0.0, np.zeros(1)), lam, 1)
    assert np.angle(off) == pytest.approx(math.remainder(math.sqrt(lam) * 0.3, 2 * math.pi))


def test_kernel_prediction_stabilizer_sum():
    # G^X = Z_2 at this point: odd isotypes cancel, even ones double up
    p = (-2, 2, 1)
    x = AmbientPoint(np.array([1, 1, 0]) / math.sqrt(2))
    f = parse_symbol("1", d=2)
    params = weyl_parameters(f, p, 0)
    zero = np.zeros(2)
    even = predicted_kernel_offdiag(params, x, (0.0, zero), (0.0, zero), 100.0, 2)
    odd = predicted_kernel_offdiag(params, x, (0.0, zero), (0.0, zero), 100.0, 1)
    assert abs(odd) < 1e-12 * abs(even)


def test_lemma_examples():
    for r in (1, 2, 5):
        rep = signature_lemma_check(np.eye(r), np.zeros((r, r)))
        assert rep.passed and rep.det == pytest.approx((-1) ** r) and rep.signature == 0
    rep = signature_lemma_check(np.array([[-2.0]]), np.array([[0.5]]))
    assert rep.expected_signature is None and rep.det == pytest.approx(-4.0) and rep.passed
    rep = hessian_upsilon_check(np.eye(2), 0.0)
    assert rep.passed and rep.det == pytest.approx(1.0)
    rep = hessian_K_check(1.0, np.zeros(2), np.eye(2))
    assert rep.passed and rep.inverse_error < 1e-15
    assert hessian_K(1.0, np.zeros(2), np.eye(2)).shape == (8, 8)


def test_leading_amplitude():
    for s in (0.5, 1.0, 2.3):
        for d, e in ((1, 0), (1, 1), (3, 1)):
            assert q0_leading_amplitude(s, d, e) == pytest.approx(math.pi**-d * s ** (e - d))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.floats(0.2, 5.0), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_hessian_K_property(d, s, theta, seed):
    rng = np.random.default_rng(seed)
    A = random_unitary_symplectic(d, rng)
    assert np.allclose(A.T @ A, np.eye(2 * d), atol=1e-12)
    assert hessian_K_check(s, rng.normal(size=2 * d), A, theta).passed


def test_hessian_suite_deterministic():
    a = hessian_suite(50, seed=7)
    b = hessian_suite(50, seed=7)
    for name in a:
        assert all(r.passed for r in a[name])
        assert [r.det for r in a[name]] == [r.det for r in b[name]]


def test_weyl_law_estimator():
    est = WeylLaw(symbol="1", d=1, weights=MODEL, varpi=5).fit()
    assert est.gamma_ == pytest.approx(0.5) and est.a_gen_ == 1.0
    assert np.allclose(est.predict(np.array([200.0, 300.0])), [100.0, 150.0])
