"""Pure numpy backend; vectorized over the sample axis."""

import numpy as np

OK, NONFINITE, SINGULAR = 0, 1, 2
R_MIN = 1e-8


def _gradient(kind, dcoef, dexp, dvar, eps, offset, Z):
    W = Z + offset
    m, dim = W.shape
    bad = np.zeros(m, dtype=bool)
    if kind == 0:
        G = np.zeros_like(W)
        if len(dcoef):
            terms = np.prod(W[:, None, :] ** dexp[None, :, :], axis=2) * dcoef
            np.add.at(G.T, dvar, terms.T)
        return G, bad
    x, P = W[:, :3], W[:, 3:]
    R = np.sqrt(np.sum(x * x, axis=1))
    bad = R < R_MIN
    Rs = np.where(bad, 1.0, R)
    G = np.empty_like(W)
    G[:, :3] = x / Rs[:, None] ** 3
    G[:, 0] += 0.5 * P[:, 1] + 0.25 * x[:, 0] - eps
    G[:, 1] += -0.5 * P[:, 0] + 0.25 * x[:, 1]
    G[:, 3] = P[:, 0] - 0.5 * x[:, 1]
    G[:, 4] = P[:, 1] + 0.5 * x[:, 0]
    G[:, 5] = P[:, 2]
    return G, bad


def _field(kind, dcoef, dexp, dvar, eps, offset, rows, z0, c, d, Z):
    G, bad = _gradient(kind, dcoef, dexp, dvar, eps, offset, Z)
    n = Z.shape[1] // 2
    s1 = rows[0]
    G = G + (c * ((Z - z0) @ s1))[:, None] * s1
    # row-wise J @ g: (g_P, -g_x)
    X = np.concatenate([G[:, n:], -G[:, :n]], axis=1)
    B = X @ rows.T
    Jrows = np.concatenate([rows[:, n:], -rows[:, :n]], axis=1)
    return X + (B * d) @ Jrows, bad


def closed_loop_field_batch(kind, dcoef, dexp, dvar, eps, offset, rows, z0, c, d, Z):
    F, bad = _field(kind, dcoef, dexp, dvar, eps, offset, rows, z0, c, d, Z)
    F[bad] = np.nan
    return F


def rk4_batch(kind, dcoef, dexp, dvar, eps, offset, rows, z0, c, d, Z, dt, nsteps):
    args = (kind, dcoef, dexp, dvar, eps, offset, rows, z0, c, d)
    status = np.zeros(len(Z), dtype=np.int8)
    live = np.arange(len(Z))
    Y = Z[live]
    for _ in range(nsteps):
        if not len(live):
            break
        k1, b1 = _field(*args, Y)
        k2, b2 = _field(*args, Y + 0.5 * dt * k1)
        k3, b3 = _field(*args, Y + 0.5 * dt * k2)
        k4, b4 = _field(*args, Y + dt * k3)
        Ynew = Y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        singular = b1 | b2 | b3 | b4
        nonfinite = ~np.all(np.isfinite(Ynew), axis=1) & ~singular
        failed = singular | nonfinite
        if failed.any():
            status[live[singular]] = SINGULAR
            status[live[nonfinite]] = NONFINITE
            Z[live[failed]] = Y[failed]
            keep = ~failed
            live, Y, Ynew = live[keep], Y[keep], Ynew[keep]
        Y = Ynew
    Z[live] = Y
    return Z, status
