import numpy as np

from hamstab.hamsys import FunctionHamiltonian, symplectic_J


def random_symplectic(n, rng, scale=0.3):
    """Product of symplectic shears and a block-diagonal map."""
    I = np.eye(n)
    B = rng.normal(scale=scale, size=(n, n))
    C = rng.normal(scale=scale, size=(n, n))
    G = I + rng.normal(scale=scale, size=(n, n))
    upper = np.block([[I, B + B.T], [np.zeros((n, n)), I]])
    lower = np.block([[I, np.zeros((n, n))], [C + C.T, I]])
    diag = np.block([[G, np.zeros((n, n))], [np.zeros((n, n)), np.linalg.inv(G).T]])
    P = upper @ lower @ diag
    J = symplectic_J(n)
    assert np.max(np.abs(P.T @ J @ P - J)) < 1e-9
    return P


def quadratic_from_matrix(Q, z0=None):
    Q = 0.5 * (Q + Q.T)
    n = Q.shape[0] // 2
    z0 = np.zeros(2 * n) if z0 is None else np.asarray(z0, dtype=float)
    return FunctionHamiltonian(
        n,
        lambda z: 0.5 * (z - z0) @ Q @ (z - z0),
        lambda z: Q @ (z - z0),
        lambda z: Q,
    )


def random_saddle_center(n, rng, saddle=True):
    """Quadratic H whose normal form has random lambda and well separated omegas.

    Returns ``(H, lam, omegas, P)`` where ``H(z) = H2(P^{-1} z)``.
    """
    lam = rng.uniform(0.3, 2.0) if saddle else None
    k = n - 1 if saddle else n
    omegas = np.sort(rng.uniform(0.5, 3.0, size=k))
    while k > 1 and np.min(np.diff(omegas)) < 0.1:
        omegas = np.sort(rng.uniform(0.5, 3.0, size=k))
    d = ([-lam] if saddle else []) + list(omegas)
    d += ([lam] if saddle else []) + list(omegas)
    D = np.diag(d)
    P = random_symplectic(n, rng)
    Pinv = np.linalg.inv(P)
    Q = Pinv.T @ D @ Pinv
    return quadratic_from_matrix(Q), lam, omegas, P


def random_spd_center_system(n, rng):
    """H = lam/2 (p1^2 - q1^2) + w^T K w / 2 with K SPD on the remaining coordinates."""
    idx = [i for i in range(2 * n) if i not in (0, n)]
    X = rng.normal(size=(len(idx), len(idx)))
    K = X @ X.T + 0.5 * np.eye(len(idx))
    Q = np.zeros((2 * n, 2 * n))
    lam = rng.uniform(0.3, 2.0)
    Q[0, 0], Q[n, n] = -lam, lam
    Q[np.ix_(idx, idx)] = K
    return quadratic_from_matrix(Q), lam
