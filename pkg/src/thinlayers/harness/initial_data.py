"""Construction of the initial State from an InitialDataSpec.

Profiles are evaluated on the quadrature grid and projected onto the first
n+1 modes. The raw profile must be non-negative; the truncated series may dip
slightly below zero (projection undershoot), which is reported rather than
corrected.

Per-kind parameters (all optional, defaults in brackets):

flat
    ``f_level`` [1.0], ``g_level`` [1.0]
cosine_bump
    ``X_level + X_amp cos(X_mode pi x / L)`` for X in f, g with defaults
    f: (1.0, 0.4, 1), g: (1.0, 0.3, 2); ``noise`` [0.0] adds seeded random
    cosines of modes 1..4 with that total amplitude.
compact_support_touching_zero
    ``X_level + X_height cos^2(pi (x - X_center) / (2 X_width))`` inside
    ``|x - X_center| < X_width``, X_level outside (a C^1 bump). Defaults
    f: level 0, height 1, center L/2, width 0.3 L; g: level 0.5, height 0.
coefficients
    ``f_coeffs``, ``g_coeffs``: lists, zero-padded or truncated to n+1.
tabulated
    ``x``, ``f``, ``g``: lists of samples, linearly interpolated; or ``path``
    to a CSV file with header ``x,f,g``.
"""

from __future__ import annotations

import numpy as np

from ..basis import QuadratureGrid, SpectralCoeffs, analyze, synthesize
from ..dynamics import State
from ..errors import ConfigurationError
from .config import RunConfig

NEG_TOL = 1e-12


def _cosine(p, X, L, defaults, rng):
    level, amp, mode = (p.get(f"{X}_{k}", d) for k, d in zip(("level", "amp", "mode"), defaults))
    noise = p.get("noise", 0.0)
    w = rng.standard_normal(4)
    w *= noise / np.sum(np.abs(w))

    def prof(x):
        out = level + amp * np.cos(int(mode) * np.pi * x / L)
        for i in range(4 if noise else 0):
            out = out + w[i] * np.cos((i + 1) * np.pi * x / L)
        return out

    return prof


def cos2_bump(x, height, center, width, level=0.0):
    z = np.abs(np.asarray(x) - center) / width
    return level + np.where(z < 1.0, height * np.cos(0.5 * np.pi * np.minimum(z, 1.0)) ** 2, 0.0)


def _compact(p, X, L, defaults):
    level, height, center, width = (
        p.get(f"{X}_{k}", d) for k, d in zip(("level", "height", "center", "width"), defaults)
    )
    if width <= 0:
        raise ConfigurationError(f"{X}_width must be positive")
    return lambda x: cos2_bump(x, height, center, width, level)


def _tabulated(p):
    if "path" in p:
        data = np.genfromtxt(p["path"], delimiter=",", names=True)
        x, f, g = data["x"], data["f"], data["g"]
    else:
        try:
            x, f, g = (np.asarray(p[k], dtype=float) for k in ("x", "f", "g"))
        except KeyError as exc:
            raise ConfigurationError(f"tabulated initial data needs key {exc}") from exc
    if x.size < 2 or np.any(np.diff(x) <= 0):
        raise ConfigurationError("tabulated x must be strictly increasing with at least two points")
    return (lambda xx: np.interp(xx, x, f)), (lambda xx: np.interp(xx, x, g))


def initial_profiles(cfg: RunConfig):
    """Return callables ``(f0, g0)`` for the configured initial data."""
    spec, L = cfg.initial, cfg.L
    p = spec.params
    rng = np.random.default_rng(cfg.seed)
    if spec.kind == "flat":
        fl, gl = p.get("f_level", 1.0), p.get("g_level", 1.0)
        return (lambda x: np.full_like(x, fl, dtype=float)), (lambda x: np.full_like(x, gl, dtype=float))
    if spec.kind == "cosine_bump":
        return _cosine(p, "f", L, (1.0, 0.4, 1), rng), _cosine(p, "g", L, (1.0, 0.3, 2), rng)
    if spec.kind == "compact_support_touching_zero":
        return _compact(p, "f", L, (0.0, 1.0, 0.5 * L, 0.3 * L)), _compact(p, "g", L, (0.5, 0.0, 0.5 * L, 0.3 * L))
    if spec.kind == "tabulated":
        return _tabulated(p)
    raise ConfigurationError(f"initial data kind {spec.kind!r} has no profile form")


def initial_state(cfg: RunConfig, grid: QuadratureGrid | None = None) -> State:
    grid = grid if grid is not None else cfg.grid()
    n, L = cfg.n, cfg.L
    if cfg.initial.kind == "coefficients":
        p = cfg.initial.params
        try:
            f = SpectralCoeffs(p["f_coeffs"], L).padded(n)
            g = SpectralCoeffs(p["g_coeffs"], L).padded(n)
        except KeyError as exc:
            raise ConfigurationError(f"coefficients initial data needs key {exc}") from exc
        state = State(f, g, 0.0)
        check_nonnegative(state, grid)
        return state
    if cfg.initial.kind == "flat":
        # exact coefficients, so flat runs are equilibria to the bit
        p = cfg.initial.params
        fl, gl = p.get("f_level", 1.0), p.get("g_level", 1.0)
        if min(fl, gl) < 0:
            raise ConfigurationError("initial profiles must be non-negative")
        return State(SpectralCoeffs.constant(fl, n, L), SpectralCoeffs.constant(gl, n, L), 0.0)
    f0, g0 = initial_profiles(cfg)
    fv, gv = f0(grid.nodes), g0(grid.nodes)
    if min(fv.min(), gv.min()) < -NEG_TOL:
        raise ConfigurationError("initial profiles must be non-negative")
    return State(analyze(fv, grid, n), analyze(gv, grid, n), 0.0)


def check_nonnegative(state: State, grid: QuadratureGrid) -> None:
    if min(synthesize(state.f, grid).min(), synthesize(state.g, grid).min()) < -NEG_TOL:
        raise ConfigurationError("initial coefficients synthesize to negative grid values")


def projection_undershoot(state: State, grid: QuadratureGrid) -> float:
    """Most negative grid value of the truncated initial series (0 if none)."""
    return float(min(0.0, synthesize(state.f, grid).min(), synthesize(state.g, grid).min()))
