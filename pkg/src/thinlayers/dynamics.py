"""Galerkin vector field for the regularised two-layer system.

With ``f = sum F_k phi_k`` and ``g = sum G_k phi_k`` the coefficients evolve by

    F_j' = int a_eps(f) d3x(A f + B g) dx(phi_j) dx
    G_j' = int a_eps(g) d3x(f + g)     dx(phi_j) dx

which is the weak form of ``f_t = -dx[a_eps(f) d3x(Af + Bg)]`` (and likewise for
g) tested against ``phi_j``; the boundary term vanishes because d3x(phi_k) is a
sine. The integrals are evaluated pseudo-spectrally: synthesize on the grid,
multiply pointwise, project against ``dx(phi_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .basis import QuadratureGrid, SpectralCoeffs, wavenumbers
from .errors import InputError, NumericalOverflowError
from .regularization import RegEps, a_eps


@dataclass(frozen=True)
class PhysParams:
    """Coupling constants ``A > B > 0`` and the domain length ``L``."""

    A: float
    B: float
    L: float = 1.0

    def __post_init__(self):
        if not (self.B > 0):
            raise InputError(f"B must be positive, got {self.B}")
        if not (self.A > self.B):
            raise InputError(f"need A > B, got A={self.A}, B={self.B}")
        if not (self.L > 0):
            raise InputError(f"L must be positive, got {self.L}")

    @classmethod
    def from_fluids(cls, mu_minus, mu_plus, gamma_w, gamma_d, L=1.0):
        """Build from viscosities (lower/upper fluid) and the two surface tensions."""
        if min(mu_minus, mu_plus, gamma_w, gamma_d) <= 0:
            raise InputError("viscosities and surface tensions must be positive")
        B = mu_plus / mu_minus
        return cls(A=B * (gamma_d + gamma_w) / gamma_d, B=B, L=L)


@dataclass(frozen=True)
class State:
    f: SpectralCoeffs
    g: SpectralCoeffs
    t: float = 0.0

    def __post_init__(self):
        if self.f.n != self.g.n or self.f.length_L != self.g.length_L:
            raise InputError("f and g must share mode count and domain length")
        if not (self.t >= 0 and np.isfinite(self.t)):
            raise InputError(f"time must be finite and non-negative, got {self.t}")

    @property
    def n(self) -> int:
        return self.f.n

    @property
    def L(self) -> float:
        return self.f.length_L

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.f.coeffs, self.g.coeffs])

    @classmethod
    def from_vector(cls, u, L, t=0.0) -> "State":
        u = np.asarray(u, dtype=float)
        half = u.size // 2
        return cls(SpectralCoeffs(u[:half], L), SpectralCoeffs(u[half:], L), t)

    def at(self, t: float) -> "State":
        return replace(self, t=float(t))

    def padded(self, n: int) -> "State":
        return State(self.f.padded(n), self.g.padded(n), self.t)


class GalerkinModel:
    """Right-hand side of the coefficient ODE on flat vectors ``u = (F_0..F_n, G_0..G_n)``.

    ``thin_film=True`` freezes the f-channel at zero and drops the A-coupling,
    so g follows the scalar equation ``g_t = -dx[a_eps(g) d3x g]``.
    """

    def __init__(self, phys: PhysParams, eps, grid: QuadratureGrid, n: int, thin_film: bool = False):
        self.phys = phys
        self.eps = eps if isinstance(eps, RegEps) else RegEps(eps)
        self.grid = grid
        self.n = n
        self.thin_film = thin_film
        if not np.isclose(grid.length_L, phys.L):
            raise InputError(f"grid length {grid.length_L} does not match L={phys.L}")
        grid.check_resolves(n)
        self._T0 = grid.table(n, 0)
        self._T3 = grid.table(n, 3)
        # rows are dx(phi_j) weighted by the quadrature, so projection is one matmul
        self._P1 = grid.table(n, 1) * grid.weights[None, :]
        self.k4 = wavenumbers(n, phys.L) ** 4

    @property
    def size(self) -> int:
        return 2 * (self.n + 1)

    def split(self, u):
        return u[: self.n + 1], u[self.n + 1 :]

    def fluxes(self, u):
        """Grid values of the two fluxes ``a_eps(f) d3x(Af+Bg)`` and ``a_eps(g) d3x(f+g)``."""
        F, G = self.split(u)
        A, B = self.phys.A, self.phys.B
        f3 = F @ self._T3
        g3 = G @ self._T3
        if self.thin_film:
            hf = np.zeros(self.grid.M)
            hg = a_eps(G @ self._T0, self.eps) * g3
        else:
            hf = a_eps(F @ self._T0, self.eps) * (A * f3 + B * g3)
            hg = a_eps(G @ self._T0, self.eps) * (f3 + g3)
        return hf, hg

    def rhs(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        hf, hg = self.fluxes(u)
        out = np.concatenate([self._P1 @ hf, self._P1 @ hg])
        out[0] = 0.0
        out[self.n + 1] = 0.0
        if not np.all(np.isfinite(out)):
            bad = int(np.flatnonzero(~np.isfinite(out))[0])
            mode = bad % (self.n + 1)
            raise NumericalOverflowError(f"non-finite vector field at mode {mode}", mode=mode)
        return out

    def jacobian(self, u, base=None) -> np.ndarray:
        """Forward-difference Jacobian; columns for the two mean modes are zero."""
        u = np.asarray(u, dtype=float)
        r0 = self.rhs(u) if base is None else base
        h = np.sqrt(np.finfo(float).eps) * (1.0 + np.max(np.abs(u)))
        J = np.zeros((self.size, self.size))
        for i in range(self.size):
            if i == 0 or i == self.n + 1:
                continue
            up = u.copy()
            up[i] += h
            J[:, i] = (self.rhs(up) - r0) / h
        return J

    def stiff_coefficients(self, u):
        """Frozen mobilities ``(max a_eps(f), max a_eps(g))`` over the grid."""
        F, G = self.split(u)
        cf = float(np.max(a_eps(F @ self._T0, self.eps)))
        cg = float(np.max(a_eps(G @ self._T0, self.eps)))
        if self.thin_film:
            cf = 0.0
        return cf, cg

    def stiff_blocks(self, cf, cg) -> np.ndarray:
        """Per-mode 2x2 matrices ``S_j`` with the stiff part of the field equal to ``-S_j (F_j, G_j)``."""
        A, B = (0.0, 0.0) if self.thin_film else (self.phys.A, self.phys.B)
        blocks = np.empty((self.n + 1, 2, 2))
        blocks[:, 0, 0] = cf * A * self.k4
        blocks[:, 0, 1] = cf * B * self.k4
        blocks[:, 1, 0] = (0.0 if self.thin_film else cg) * self.k4
        blocks[:, 1, 1] = cg * self.k4
        return blocks

    def max_rate(self, u) -> float:
        """Stability scale ``max(a_eps) * A * (n pi / L)^4`` used by explicit stepping."""
        cf, cg = self.stiff_coefficients(u)
        A = 1.0 if self.thin_film else self.phys.A
        return max(cf, cg) * A * float(self.k4[-1])


def assemble_rhs(state: State, phys: PhysParams, eps, grid: QuadratureGrid):
    """Return ``(dF, dG)`` for the coupled system at ``state``."""
    model = GalerkinModel(phys, eps, grid, state.n)
    return model.split(model.rhs(state.vector))


def assemble_jacobian(state: State, phys: PhysParams, eps, grid: QuadratureGrid) -> np.ndarray:
    model = GalerkinModel(phys, eps, grid, state.n)
    return model.jacobian(state.vector)


def flat_linearization(phys: PhysParams, eps, fbar: float, gbar: float, j: int) -> np.ndarray:
    """2x2 block of the linearisation about the flat state (fbar, gbar) acting on (F_j, G_j)."""
    e = eps.eps if isinstance(eps, RegEps) else float(eps)
    if fbar < 0 or gbar < 0:
        raise InputError("flat state must be non-negative")
    k4 = (j * np.pi / phys.L) ** 4
    af, ag = fbar + e, gbar + e
    return -k4 * np.array([[phys.A * af, phys.B * af], [ag, ag]])
