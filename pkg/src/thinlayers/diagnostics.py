"""Masses, energies, dissipation rates and the weak-form residual.

Quadratic functionals of the coefficients (E1, D2) are computed exactly by
Parseval; functionals with a nonlinear integrand (E2eps, E2, D1) use the grid.
The ``*_quadrature`` variants evaluate the Parseval quantities on the grid and
exist as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .basis import QuadratureGrid, SpectralCoeffs, eval_basis, make_grid, synthesize, wavenumbers
from .dynamics import PhysParams, State
from .errors import InputError
from .regularization import a_eps, phi, phi_eps

CSV_COLUMNS = ("t", "mass_f", "mass_g", "E1", "E2eps", "E2", "D1", "D2", "min_f", "min_g", "dt_last")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass_f: float
    mass_g: float
    E1: float
    E2eps: float
    E2: Optional[float]
    D1: float
    D2: float
    min_f: float
    min_g: float
    dt_last: float

    def as_row(self) -> list[str]:
        """CSV cells with round-trip (17 significant digit) formatting; E2 blank when absent."""
        cells = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            cells.append("" if v is None else format(float(v), ".17g"))
        return cells

    def to_dict(self) -> dict:
        return asdict(self)


def mass(c: SpectralCoeffs) -> float:
    """``int_0^L u dx``; only the constant mode contributes."""
    return float(c.coeffs[0] * math.sqrt(c.length_L))


def energy1(state: State, phys: PhysParams) -> float:
    """Surface energy ``1/2 int |f_x|^2 + B/(A-B) |(f+g)_x|^2``."""
    k2 = wavenumbers(state.n, state.L) ** 2
    F, G = state.f.coeffs, state.g.coeffs
    r = phys.B / (phys.A - phys.B)
    return float(0.5 * np.sum(k2 * (F**2 + r * (F + G) ** 2)))


def energy1_quadrature(state: State, phys: PhysParams, grid: QuadratureGrid) -> float:
    fx = synthesize(state.f, grid, 1)
    gx = synthesize(state.g, grid, 1)
    r = phys.B / (phys.A - phys.B)
    return 0.5 * grid.integrate(fx**2 + r * (fx + gx) ** 2)


def energy2_eps(state: State, eps, phys: PhysParams, grid: QuadratureGrid) -> float:
    """Regularised entropy ``int phi_eps(f) + B phi_eps(g)``."""
    fv = synthesize(state.f, grid)
    gv = synthesize(state.g, grid)
    return grid.integrate(phi_eps(fv, eps) + phys.B * phi_eps(gv, eps))


def energy2(state: State, phys: PhysParams, grid: QuadratureGrid) -> Optional[float]:
    """Entropy ``int phi(f) + B phi(g)``, or None if either layer is negative on the grid."""
    fv = synthesize(state.f, grid)
    gv = synthesize(state.g, grid)
    if fv.min() < 0.0 or gv.min() < 0.0:
        return None
    return grid.integrate(phi(fv) + phys.B * phi(gv))


def dissipation1(state: State, phys: PhysParams, eps, grid: QuadratureGrid) -> float:
    """``1/(A-B) int a_eps(f)|d3x(Af+Bg)|^2 + B a_eps(g)|d3x(f+g)|^2``."""
    A, B = phys.A, phys.B
    f3 = synthesize(state.f, grid, 3)
    g3 = synthesize(state.g, grid, 3)
    af = a_eps(synthesize(state.f, grid), eps)
    ag = a_eps(synthesize(state.g, grid), eps)
    dens = af * (A * f3 + B * g3) ** 2 + B * ag * (f3 + g3) ** 2
    return grid.integrate(dens) / (A - B)


def dissipation2(state: State, phys: PhysParams) -> float:
    """``int (A-B)|f_xx|^2 + B|(f+g)_xx|^2`` by Parseval."""
    k4 = wavenumbers(state.n, state.L) ** 4
    F, G = state.f.coeffs, state.g.coeffs
    return float(np.sum(k4 * ((phys.A - phys.B) * F**2 + phys.B * (F + G) ** 2)))


def dissipation2_quadrature(state: State, phys: PhysParams, grid: QuadratureGrid) -> float:
    fxx = synthesize(state.f, grid, 2)
    gxx = synthesize(state.g, grid, 2)
    return grid.integrate((phys.A - phys.B) * fxx**2 + phys.B * (fxx + gxx) ** 2)


def record(state: State, phys: PhysParams, eps, grid: QuadratureGrid, dt_last: float) -> DiagnosticsRecord:
    fv = synthesize(state.f, grid)
    gv = synthesize(state.g, grid)
    return DiagnosticsRecord(
        t=float(state.t),
        mass_f=mass(state.f),
        mass_g=mass(state.g),
        E1=energy1(state, phys),
        E2eps=energy2_eps(state, eps, phys, grid),
        E2=energy2(state, phys, grid),
        D1=dissipation1(state, phys, eps, grid),
        D2=dissipation2(state, phys),
        min_f=float(fv.min()),
        min_g=float(gv.min()),
        dt_last=float(dt_last),
    )


def _weak_integrand(state: State, phys: PhysParams, grid: QuadratureGrid, j: int):
    L = state.L
    dpsi = eval_basis(j, grid.nodes, L, 1)
    d2psi = eval_basis(j, grid.nodes, L, 2)
    f, fx, fxx = (synthesize(state.f, grid, d) for d in (0, 1, 2))
    g, gx, gxx = (synthesize(state.g, grid, d) for d in (0, 1, 2))
    rf = grid.integrate((phys.A * fxx + phys.B * gxx) * (fx * dpsi + f * d2psi))
    rg = grid.integrate((fxx + gxx) * (gx * dpsi + g * d2psi))
    return rf, rg


def weak_residual(run: Sequence[State], phys: PhysParams, j: int, T: float, grid: QuadratureGrid | None = None):
    """Residual of the unregularised weak formulation tested with ``psi = phi_j``.

    ``run`` is a time-ordered list of sampled states starting at the initial
    datum. ``T`` must be one of the sample times. The time integral uses the
    trapezoid rule over the samples in [t_0, T].
    """
    if len(run) < 2:
        raise InputError("weak residual needs at least two samples")
    n = run[0].n
    if not 0 <= j <= n:
        raise InputError(f"test mode {j} outside 0..{n}")
    times = np.array([s.t for s in run])
    if np.any(np.diff(times) <= 0):
        raise InputError("samples must be strictly increasing in time")
    hits = np.flatnonzero(np.isclose(times, T, rtol=0, atol=1e-12 * max(1.0, abs(T))))
    if hits.size == 0:
        raise InputError(f"T={T} is not a sample time")
    last = int(hits[0])
    if grid is None:
        grid = make_grid(8 * (n + 1), run[0].L)
    if last == 0:
        return 0.0, 0.0
    vals = np.array([_weak_integrand(s, phys, grid, j) for s in run[: last + 1]])
    ts = times[: last + 1]
    time_int = np.trapezoid(vals, ts, axis=0)
    r_f = run[last].f.coeffs[j] - run[0].f.coeffs[j] + time_int[0]
    r_g = run[last].g.coeffs[j] - run[0].g.coeffs[j] + time_int[1]
    return float(r_f), float(r_g)
