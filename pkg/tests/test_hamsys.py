import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamstab.errors import ConvergenceError, PreconditionError, RankError, SingularityError
from hamstab.hamsys import (
    FunctionHamiltonian,
    PolynomialHamiltonian,
    find_equilibrium,
    fd_gradient,
    gradient,
    hessian,
    poisson_bracket,
    symplectic_J,
    vector_field,
)
from hamstab.systems import hydrogen, load_polynomial, make_system, model, quadratic

EPS = 0.58


def h2(lam=1.0, omega=1.0):
    return quadratic(lam, [omega])


# symplectic_J

def test_J_small_cases():
    np.testing.assert_array_equal(symplectic_J(1), [[0, 1], [-1, 0]])
    np.testing.assert_array_equal(
        symplectic_J(2), [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]]
    )


@pytest.mark.parametrize("n", range(1, 6))
def test_J_identities(n):
    J = symplectic_J(n)
    np.testing.assert_array_equal(J @ J, -np.eye(2 * n))
    np.testing.assert_array_equal(J.T, -J)
    np.testing.assert_array_equal(J @ J.T, np.eye(2 * n))


# gradient / hessian

def test_gradient_quadratic_saddle():
    np.testing.assert_allclose(gradient(h2(), [1, 0, 0, 0]), [-1, 0, 0, 0], atol=1e-15)


def test_gradient_model_translated():
    H = model(2, 1).shifted([0.5, 0, 0, 0])
    g = gradient(H, [0.1, 0, 0, 0])
    assert g[0] == pytest.approx((4 * 0.1**3 - 0.1) / 4, abs=1e-14)
    assert g[0] == pytest.approx(-0.024, abs=1e-14)
    np.testing.assert_allclose(fd_gradient(H.energy, np.array([0.1, 0, 0, 0])), g, atol=1e-10)


@pytest.mark.parametrize("name", ["quadratic", "model", "hydrogen"])
def test_gradient_zero_at_equilibrium(name):
    H, guess = make_system(name)
    z0 = find_equilibrium(H, guess)
    assert np.max(np.abs(gradient(H, z0))) <= 1e-10
    assert np.max(np.abs(vector_field(H, z0))) <= 1e-10


def test_hessian_quadratic_everywhere(rng):
    for z in rng.normal(size=(5, 4)):
        np.testing.assert_allclose(hessian(h2(), z), np.diag([-1.0, 1, 1, 1]), atol=1e-14)


def test_hessian_model_at_saddle():
    D2 = hessian(model(2, 1), [0.5, 0, 0, 0])
    np.testing.assert_allclose(D2, np.diag([-0.25, 2.0, 1.0, 1.0]), atol=1e-14)


def test_hessian_hydrogen_entries():
    H = hydrogen(EPS)
    D2 = hessian(H, H.stark_point())
    A = symplectic_J(3) @ D2
    assert A[3, 0] == pytest.approx(2 * EPS**1.5 - 0.25, abs=1e-12)
    assert A[4, 1] == pytest.approx(-(EPS**1.5 + 0.25), abs=1e-12)
    assert A[5, 2] == pytest.approx(-(EPS**1.5), abs=1e-12)


def test_fd_fallback_matches_analytic(rng):
    base = model(2, 1)
    H = FunctionHamiltonian(2, base.energy)
    assert H.gradient_mode == "finite-difference"
    assert base.gradient_mode == "analytic"
    for z in rng.uniform(-1, 1, size=(10, 4)):
        np.testing.assert_allclose(H.gradient(z), base.gradient(z), rtol=1e-8, atol=1e-9)
        D2 = H.hessian(z)
        assert np.max(np.abs(D2 - D2.T)) <= 1e-9
        np.testing.assert_allclose(D2, base.hessian(z), atol=1e-5)


@pytest.mark.parametrize("name,scale", [("quadratic", 1.0), ("model", 1.0), ("hydrogen", 0.3)])
def test_analytic_vs_fd_gradient(name, scale, rng):
    H, guess = make_system(name)
    z0 = find_equilibrium(H, guess)
    for z in z0 + rng.uniform(-scale, scale, size=(100, 2 * H.n)):
        g = H.gradient(z)
        gf = fd_gradient(H.energy, z)
        assert np.max(np.abs(g - gf) / np.maximum(np.abs(g), 1e-3)) <= 1e-6


def test_hydrogen_hessian_matches_fd():
    H = hydrogen(EPS)
    z = H.stark_point() + 0.05
    fd = FunctionHamiltonian(3, H.energy, H.gradient)
    np.testing.assert_allclose(H.hessian(z), fd.hessian(z), atol=1e-7)


def test_hydrogen_singularity_guard():
    H = hydrogen(EPS)
    with pytest.raises(SingularityError):
        H.energy(np.array([1e-9, 0, 0, 0.1, 0, 0]))
    with pytest.raises(SingularityError):
        H.gradient(np.zeros(6))


# vector field and brackets

def test_vector_field_examples():
    np.testing.assert_allclose(vector_field(h2(), [1, 0, 0, 0]), [0, 0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(vector_field(model(2, 1), [0.5, 0, 1, 0]), [1, 0, 0, 0], atol=1e-15)


def test_poisson_bracket_examples():
    x1 = lambda z: z[0]
    x2 = lambda z: z[1]
    P1 = lambda z: z[2]
    z = np.array([0.3, -0.2, 0.7, 0.1])
    assert poisson_bracket(x1, P1, z) == pytest.approx(1.0, abs=1e-10)
    assert poisson_bracket(x1, x2, z) == pytest.approx(0.0, abs=1e-10)
    assert poisson_bracket(x1, h2(), np.array([0.0, 0, 1, 0])) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_poisson_bracket_antisymmetric(z):
    z = np.array(z)
    F = model(2, 1)
    G = lambda w: w[0] * w[3] - np.sin(w[1]) + w[2] ** 2
    assert poisson_bracket(F, G, z) == pytest.approx(-poisson_bracket(G, F, z), abs=1e-12)


# equilibria

def test_equilibrium_model():
    z = find_equilibrium(model(2, 1), [0.55, 0.05, 0, 0])
    np.testing.assert_allclose(z, [0.5, 0, 0, 0], atol=1e-12)
    zt = find_equilibrium(model(2, 1).shifted([0.5, 0, 0, 0]), [0.05, 0.05, 0, 0])
    np.testing.assert_allclose(zt, 0, atol=1e-12)


def test_equilibrium_hydrogen():
    z = find_equilibrium(hydrogen(EPS), [1.3, 0, 0, 0, -0.65, 0])
    r = EPS**-0.5
    np.testing.assert_allclose(z, [r, 0, 0, 0, -r / 2, 0], atol=1e-12)
    np.testing.assert_allclose(z, [1.31306, 0, 0, 0, -0.65653, 0], atol=1e-5)


def test_equilibrium_quadratic_one_step():
    np.testing.assert_allclose(find_equilibrium(h2(), [0.1, -0.2, 0.3, 0.05], max_iter=1), 0, atol=1e-15)


def test_equilibrium_errors():
    with pytest.raises(ConvergenceError):
        find_equilibrium(hydrogen(EPS), [1.0, 0.2, 0.1, 0, -0.5, 0], max_iter=1)
    flat = PolynomialHamiltonian(1, [(0.5, (0, 2))])
    with pytest.raises(RankError):
        find_equilibrium(flat, [0.3, 0.4])


# polynomial systems

def test_polynomial_evaluation_exact(rng):
    terms = [(2.0, (1, 2, 0, 1)), (-0.5, (0, 0, 3, 0)), (1.25, (0, 0, 0, 0))]
    H = PolynomialHamiltonian(2, terms)
    for z in rng.normal(size=(5, 4)):
        want = sum(c * np.prod(z ** np.array(e)) for c, e in terms)
        assert H.energy(z) == want
        np.testing.assert_allclose(H.gradient(z), fd_gradient(H.energy, z), rtol=1e-8, atol=1e-9)


def test_polynomial_roundtrip(tmp_path):
    H = model(3, 1)
    data = H.to_dict()
    data["guess"] = [0.55, 0.0, 0.0, 0.0]
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(data))
    H2, guess = load_polynomial(path)
    assert H2.terms == H.terms
    np.testing.assert_allclose(guess, [0.55, 0, 0, 0])


def test_polynomial_validation():
    with pytest.raises(PreconditionError):
        PolynomialHamiltonian(2, [(1.0, (1, 0, 0))])
    with pytest.raises(PreconditionError):
        PolynomialHamiltonian(1, [(1.0, (-1, 0))])


def test_model_requires_a_greater_b():
    with pytest.raises(PreconditionError):
        model(1, 2)


def test_make_system_unknown():
    with pytest.raises(PreconditionError):
        make_system("nope")
    with pytest.raises(PreconditionError):
        make_system("model", {"c": 1})
