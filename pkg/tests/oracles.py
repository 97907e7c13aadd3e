"""Independent reference computations used by the tests.

Nothing here imports the package's basis tables or assembly code: nodes,
basis functions and integrals are rebuilt from scratch so the checks do not
share a code path with what they check.
"""

import numpy as np


def midpoint_nodes(M, L):
    h = L / M
    return h * (np.arange(M) + 0.5), np.full(M, h)


def phi(k, x, L):
    return np.sqrt(1.0 / L) * np.ones_like(x) if k == 0 else np.sqrt(2.0 / L) * np.cos(k * np.pi * x / L)


def dphi(k, x, L):
    return np.zeros_like(x) if k == 0 else -(k * np.pi / L) * np.sqrt(2.0 / L) * np.sin(k * np.pi * x / L)


def d3phi(k, x, L):
    return np.zeros_like(x) if k == 0 else (k * np.pi / L) ** 3 * np.sqrt(2.0 / L) * np.sin(k * np.pi * x / L)


def mobility(s, eps):
    return np.array([v + eps if v >= 0 else eps for v in s])


def galerkin_field_double_sum(F, G, A, B, L, eps, M=4096):
    """Coefficient derivatives written as the literal double sum over modes.

    Psi_1j = sum_k (A F_k + B G_k) int a(f) d3phi_k dphi_j,
    Psi_2j = sum_k (F_k + G_k)     int a(g) d3phi_k dphi_j,
    with every integral done separately by an M-point midpoint rule.
    """
    n = len(F) - 1
    x, w = midpoint_nodes(M, L)
    f = sum(F[l] * phi(l, x, L) for l in range(n + 1))
    g = sum(G[l] * phi(l, x, L) for l in range(n + 1))
    af, ag = mobility(f, eps), mobility(g, eps)
    dF = np.zeros(n + 1)
    dG = np.zeros(n + 1)
    for j in range(1, n + 1):
        for k in range(1, n + 1):
            kern_f = np.sum(w * af * d3phi(k, x, L) * dphi(j, x, L))
            kern_g = np.sum(w * ag * d3phi(k, x, L) * dphi(j, x, L))
            dF[j] += (A * F[k] + B * G[k]) * kern_f
            dG[j] += (F[k] + G[k]) * kern_g
    return dF, dG


def quadratic_roots(a, b, c, d):
    """Eigenvalues of [[a, b], [c, d]] from the characteristic polynomial."""
    tr, det = a + d, a * d - b * c
    disc = np.sqrt(complex(tr * tr - 4 * det))
    return sorted([(tr - disc) / 2, (tr + disc) / 2], key=lambda z: z.real)
