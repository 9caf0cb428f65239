import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamstab import analyze
from hamstab.control import (
    ClosedLoopSystem,
    FeedbackLaw,
    closed_loop_field,
    closed_loop_jacobian,
    codistribution_rank,
    destabilize,
    feedback_functions,
    modified_hamiltonian,
    stabilize,
    theorem1_checks,
)
from hamstab.errors import ClassificationError, GainError
from hamstab.hamsys import fd_gradient, symplectic_J, vector_field
from hamstab.sim import IntegratorConfig, integrate
from hamstab.spectral import Kind, classify, linearize
from hamstab.systems import quadratic


def pipeline(H, guess=None):
    return analyze(H, np.full(2 * H.n, 1e-3) if guess is None else guess)


def test_feedback_functions_hydrogen(hydrogen_pipeline):
    F = feedback_functions(hydrogen_pipeline.T)
    names = ["x1", "x2", "x3", "P1", "P2", "P3"]
    got = [dict((nm, a) for a, nm in f.terms(names, tol=1e-8)) for f in F]
    assert got[0] == pytest.approx({"x1": 0.998122, "P2": -0.741116}, abs=1e-4)
    assert got[1] == pytest.approx({"P3": 1.22663}, abs=1e-4)
    assert got[2] == pytest.approx({"x2": 0.839317, "P1": -0.623201}, abs=1e-4)
    for f in F:
        assert f(hydrogen_pipeline.z0) == 0.0


def test_feedback_functions_model(model_pipeline):
    F = feedback_functions(model_pipeline.T)
    np.testing.assert_allclose(F[0].coeffs, [1 / np.sqrt(2), 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(F[1].coeffs, [0, 0, 0, 2**-0.25], atol=1e-12)
    assert F[0](model_pipeline.z0) == 0.0


def test_feedback_functions_are_normal_form_q(hydrogen_pipeline, rng):
    T = hydrogen_pipeline.T
    z = T.z0 + 0.1 * rng.normal(size=6)
    qp = T.to_normal_form(z)
    np.testing.assert_allclose([f(z) for f in feedback_functions(T)], qp[:3], atol=1e-14)


def test_modified_hessian_normal_form():
    H = quadratic(1.0, [2.0])
    z0, cls, T = pipeline(H)
    law = FeedbackLaw.from_transform(T, c=3.0)
    Hm = modified_hamiltonian(H, law)
    C = T.S_inv.T @ Hm.hessian(z0) @ T.S_inv
    np.testing.assert_allclose(C, np.diag([2.0, 2.0, 1.0, 2.0]), atol=1e-12)


def test_gain_preconditions(model_pipeline):
    T = model_pipeline.T
    with pytest.raises(GainError):
        FeedbackLaw.from_transform(T, c=T.lam)
    with pytest.raises(GainError):
        FeedbackLaw.from_transform(T, c=2 * T.lam, d=[1.0, 0.0])
    law = FeedbackLaw(T.feedback_rows, c=T.lam, d=np.ones(2), z0=T.z0, lam=T.lam)
    with pytest.raises(GainError):
        modified_hamiltonian(model_pipeline.H, law)
    with pytest.raises(ClassificationError):
        FeedbackLaw.from_transform(pipeline(quadratic(0, [1.0, 2.0]))[2])


def test_default_gains(hydrogen_pipeline):
    law = hydrogen_pipeline.CL.law
    assert law.c == pytest.approx(2 * hydrogen_pipeline.cls.lam)
    np.testing.assert_array_equal(law.d, np.ones(3))


def test_field_vanishes_at_equilibrium(hydrogen_pipeline, model_pipeline):
    for p in (hydrogen_pipeline, model_pipeline):
        assert np.max(np.abs(closed_loop_field(p.CL, p.z0))) <= 1e-12


def test_quadratic_closed_loop_linear_oracle():
    H = quadratic(1.0, [1.0])
    z0, cls, T = pipeline(H)
    CL = stabilize(H, T, c=2.0, d=[1.0, 1.0])
    z = np.array([0.1, 0, 0, 0])
    J = symplectic_J(2)
    s = T.feedback_rows
    Qm = H.hessian(z0) + 2.0 * np.outer(s[0], s[0])
    Acl = (np.eye(4) + sum(J @ np.outer(si, si) for si in s)) @ J @ Qm
    np.testing.assert_allclose(CL.field(z), Acl @ z, atol=1e-15)
    np.testing.assert_allclose(closed_loop_jacobian(CL), Acl, atol=1e-8)
    b = s @ J @ Qm @ z
    assert CL.dissipation_rate(z) == pytest.approx(-np.sum(b**2), abs=1e-15)
    assert Qm @ z @ CL.field(z) == pytest.approx(CL.dissipation_rate(z), abs=1e-15)


def test_model_field_dual_implementation(model_pipeline):
    H, T = model_pipeline.H, model_pipeline.T
    CL = stabilize(H, T, c=1.0, d=[1.0, 1.0])
    s = T.feedback_rows
    z = T.z0 + np.array([0.1, 0, 0, 0])

    def hmod(w):
        return H.energy(w) + 0.5 * ((w - T.z0) @ s[0]) ** 2

    g = fd_gradient(hmod, z)
    J = symplectic_J(2)
    want = J @ g + sum((si @ J @ g) * (J @ si) for si in s)
    np.testing.assert_allclose(CL.field(z), want, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.2, 0.2), min_size=6, max_size=6))
def test_dissipation_identity_pointwise(hydrogen_pipeline, dz):
    CL = hydrogen_pipeline.CL
    z = CL.z0 + np.array(dz)
    lhs = CL.h_mod.gradient(z) @ CL.field(z)
    assert lhs == pytest.approx(CL.dissipation_rate(z), abs=1e-12)
    assert CL.dissipation_rate(z) <= 0
    # brackets are the time derivatives of F_i along the closed loop
    np.testing.assert_allclose(CL.law.rows @ CL.field(z), CL.brackets(z), atol=1e-12)


def test_field_batch_matches(hydrogen_pipeline, rng):
    CL = hydrogen_pipeline.CL
    Z = CL.z0 + 0.1 * rng.normal(size=(7, 6))
    np.testing.assert_allclose(CL.field_batch(Z), np.array([CL.field(z) for z in Z]), atol=1e-14)


def test_zero_gains_reduce_to_hamiltonian_field(hydrogen_pipeline, rng):
    T = hydrogen_pipeline.T
    law = FeedbackLaw(T.feedback_rows, c=0.0, d=np.zeros(3), z0=T.z0)
    CL = ClosedLoopSystem(hydrogen_pipeline.H, law)
    assert CL.conservative
    for z in T.z0 + 0.1 * rng.normal(size=(5, 6)):
        np.testing.assert_array_equal(CL.field(z), vector_field(hydrogen_pipeline.H, z))


def test_theorem1_passes(hydrogen_pipeline, model_pipeline):
    for p, dim in ((hydrogen_pipeline, 6), (model_pipeline, 4)):
        rep = theorem1_checks(p.CL)
        assert rep.passed
        assert rep.rank_dC == dim
        assert rep.as_dict()["passed"]


def test_theorem1_degenerate_law(hydrogen_pipeline):
    T = hydrogen_pipeline.T
    rows = T.feedback_rows.copy()
    rows[1] = 0.0
    law = FeedbackLaw(rows, c=2 * T.lam, d=np.ones(3), z0=T.z0, lam=T.lam)
    rep = theorem1_checks(ClosedLoopSystem(hydrogen_pipeline.H, law))
    assert rep.rank_dC < 6
    assert not rep.passed


def test_theorem1_gain_below_lambda(model_pipeline):
    T = model_pipeline.T
    law = FeedbackLaw(T.feedback_rows, c=0.5 * T.lam, d=np.ones(2), z0=T.z0, lam=T.lam)
    rep = theorem1_checks(ClosedLoopSystem(model_pipeline.H, law))
    assert not rep.positive_definite


def test_codistribution_rank_simple():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert codistribution_rank(np.array([[1.0, 0.0]]), A) == 2
    assert codistribution_rank(np.zeros((1, 2)), A) == 0


def test_jacobian_spectrum_stable(hydrogen_pipeline, model_pipeline):
    for p in (hydrogen_pipeline, model_pipeline):
        w = np.linalg.eigvals(closed_loop_jacobian(p.CL))
        assert np.max(w.real) < -1e-6


def test_destabilize_quadratic():
    H = quadratic(0, [1.0, 2.0])
    CL = destabilize(H, np.zeros(4), 2.0)
    cls = classify(linearize(CL.h_mod, np.zeros(4)))
    assert cls.kind == Kind.SADDLE_CENTER
    assert cls.lam == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(cls.omegas, [2.0], atol=1e-10)
    assert CL.conservative


@pytest.mark.parametrize("c", [1.3, 2.0, 4.5])
def test_destabilize_rate_formula(c):
    H = quadratic(0, [0.8, 1.7, 2.9])
    CL = destabilize(H, np.zeros(6), c)
    cls = classify(linearize(CL.h_mod, np.zeros(6)))
    assert cls.lam == pytest.approx(np.sqrt(0.8 * (c - 0.8)), abs=1e-10)
    np.testing.assert_allclose(cls.omegas, [1.7, 2.9], atol=1e-10)


def test_destabilize_errors(model_pipeline):
    H = quadratic(0, [1.0, 2.0])
    with pytest.raises(GainError):
        destabilize(H, np.zeros(4), 1.0)
    with pytest.raises(ClassificationError):
        destabilize(model_pipeline.H, model_pipeline.z0, 5.0)


def test_destabilized_flow_conserves_energy():
    H = quadratic(0, [1.0, 2.0])
    CL = destabilize(H, np.zeros(4), 2.0)
    z = np.array([1e-2, -2e-2, 3e-2, 1e-2])
    tr = integrate(CL.field, z, IntegratorConfig(method="rk4", dt=1e-3, t_final=3.0))
    e = np.array([CL.h_mod.energy(w) for w in tr.states])
    assert np.max(np.abs(e - e[0])) <= 1e-12


def test_destabilized_polynomial_expansion(rng):
    H = quadratic(0, [1.0, 2.0])
    CL = destabilize(H, np.zeros(4), 3.0)
    P = CL.h_mod.as_polynomial()
    for z in rng.normal(size=(5, 4)):
        assert P.energy(z) == pytest.approx(CL.h_mod.energy(z), abs=1e-12)
