"""Neumann cosine eigenbasis on (0, L) and quadrature on uniform panels.

The basis functions are the orthonormal eigenfunctions of ``-d^2/dx^2`` with
zero Neumann conditions::

    phi_0 = sqrt(1/L),   phi_k = sqrt(2/L) cos(k pi x / L),  k >= 1.

Synthesis and analysis are direct O(nM) matrix products against tabulated
basis values; nothing here prevents swapping in a DCT later.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InputError

MAX_DERIV = 3


def _phase(k, x, L):
    # k*x/L reduced modulo 2
    return np.mod(np.multiply.outer(k, np.asarray(x, dtype=float) / L), 2.0)


def _sin_pi(r):
    # sin(pi*r) with exact zeros at integer r, so derivatives vanish at the walls
    return np.where(r == np.round(r), 0.0, np.sin(np.pi * r))


def eval_basis(k, x, L, deriv=0):
    """Evaluate the ``deriv``-th derivative of ``phi_k`` at ``x``.

    ``k`` and ``x`` may be scalars or arrays; for array input the result has
    shape ``np.shape(k) + np.shape(x)``.
    """
    if L <= 0:
        raise InputError(f"domain length must be positive, got {L}")
    if deriv not in (0, 1, 2, 3):
        raise InputError(f"derivative order must be 0..3, got {deriv}")
    k_arr = np.asarray(k)
    x_arr = np.asarray(x, dtype=float)
    if np.any(k_arr < 0) or not np.issubdtype(k_arr.dtype, np.integer):
        raise InputError("mode index must be a non-negative integer")
    if np.any(x_arr < 0.0) or np.any(x_arr > L):
        raise InputError(f"positions must lie in [0, {L}]")

    r = _phase(k_arr, x_arr, L)
    wave = np.multiply.outer(k_arr * np.pi / L, np.ones_like(x_arr))
    amp = np.where(np.multiply.outer(k_arr, np.ones_like(x_arr)) == 0, np.sqrt(1.0 / L), np.sqrt(2.0 / L))

    if deriv == 0:
        out = amp * np.cos(np.pi * r)
    elif deriv == 1:
        out = -wave * amp * _sin_pi(r)
    elif deriv == 2:
        out = -(wave**2) * amp * np.cos(np.pi * r)
    else:
        out = wave**3 * amp * _sin_pi(r)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Composite quadrature rule on [0, L].

    Basis tables (values of the derivatives of ``phi_k`` at the nodes) are
    cached per mode count, so one grid instance should be reused across a run.
    """

    nodes: np.ndarray
    weights: np.ndarray
    length_L: float
    rule: str = "midpoint"
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def M(self) -> int:
        return int(self.nodes.size)

    @property
    def w_min(self) -> float:
        return float(self.weights.min())

    def table(self, n: int, deriv: int = 0) -> np.ndarray:
        """Return the (n+1, M) matrix of ``d^deriv phi_k`` at the nodes."""
        key = (n, deriv)
        tab = self._tables.get(key)
        if tab is None:
            tab = eval_basis(np.arange(n + 1), self.nodes, self.length_L, deriv)
            tab.setflags(write=False)
            self._tables[key] = tab
        return tab

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def check_resolves(self, n: int) -> None:
        if self.M < 4 * (n + 1):
            raise ConfigurationError(
                f"quadrature with M={self.M} nodes cannot resolve n={n} modes (need M >= {4 * (n + 1)})"
            )


def make_grid(M: int, L: float, rule: str = "midpoint", n: int | None = None, panel_order: int = 4) -> QuadratureGrid:
    """Build a composite quadrature rule with ``M`` nodes on [0, L].

    ``rule="midpoint"`` uses M uniform panels, which integrates every cosine of
    frequency below 2M exactly. ``rule="gauss"`` uses M/panel_order Gauss-Legendre
    panels. If ``n`` is given the grid is checked against M >= 4(n+1).
    """
    if M < 2:
        raise ConfigurationError(f"need at least 2 quadrature nodes, got {M}")
    if L <= 0:
        raise InputError(f"domain length must be positive, got {L}")
    if rule == "midpoint":
        h = L / M
        nodes = (np.arange(M) + 0.5) * h
        weights = np.full(M, h)
    elif rule == "gauss":
        if M % panel_order:
            raise ConfigurationError(f"M={M} is not a multiple of the panel order {panel_order}")
        panels = M // panel_order
        ref_x, ref_w = np.polynomial.legendre.leggauss(panel_order)
        h = L / panels
        left = np.arange(panels)[:, None] * h
        nodes = (left + 0.5 * h * (ref_x[None, :] + 1.0)).ravel()
        weights = np.tile(0.5 * h * ref_w, panels)
    else:
        raise ConfigurationError(f"unknown quadrature rule {rule!r}")
    nodes.setflags(write=False)
    weights.setflags(write=False)
    grid = QuadratureGrid(nodes=nodes, weights=weights, length_L=float(L), rule=rule)
    if n is not None:
        grid.check_resolves(n)
    return grid


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Coefficients of ``u = sum_k coeffs[k] phi_k`` on (0, length_L)."""

    coeffs: np.ndarray
    length_L: float

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size < 1:
            raise InputError("coefficient vector must have at least one entry")
        if not np.all(np.isfinite(c)):
            raise InputError("coefficients must be finite")
        if not self.length_L > 0:
            raise InputError(f"domain length must be positive, got {self.length_L}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "length_L", float(self.length_L))

    @property
    def n(self) -> int:
        return self.coeffs.size - 1

    def __eq__(self, other):
        if not isinstance(other, SpectralCoeffs):
            return NotImplemented
        return self.length_L == other.length_L and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.length_L, self.coeffs.tobytes()))

    def padded(self, n: int) -> "SpectralCoeffs":
        """Zero-pad (or truncate) to mode count ``n``."""
        out = np.zeros(n + 1)
        m = min(n, self.n) + 1
        out[:m] = self.coeffs[:m]
        return SpectralCoeffs(out, self.length_L)

    @classmethod
    def constant(cls, value: float, n: int, L: float) -> "SpectralCoeffs":
        c = np.zeros(n + 1)
        c[0] = value * np.sqrt(L)
        return cls(c, L)


def _check_grid(c: SpectralCoeffs, grid: QuadratureGrid) -> None:
    if not np.isclose(c.length_L, grid.length_L, rtol=0, atol=1e-14 * grid.length_L):
        raise InputError(f"grid covers [0, {grid.length_L}] but coefficients live on [0, {c.length_L}]")


def synthesize(c: SpectralCoeffs, grid: QuadratureGrid, deriv: int = 0) -> np.ndarray:
    """Values of the ``deriv``-th derivative of ``c`` at the grid nodes."""
    _check_grid(c, grid)
    if deriv not in (0, 1, 2, 3):
        raise InputError(f"derivative order must be 0..3, got {deriv}")
    return c.coeffs @ grid.table(c.n, deriv)


def evaluate(c: SpectralCoeffs, x, deriv: int = 0):
    """Evaluate ``c`` (or a derivative) at arbitrary points in [0, L]."""
    tab = eval_basis(np.arange(c.n + 1), np.atleast_1d(x), c.length_L, deriv)
    out = c.coeffs @ tab
    return float(out[0]) if np.ndim(x) == 0 else out


def analyze(values, grid: QuadratureGrid, n: int) -> SpectralCoeffs:
    """Project grid values onto ``phi_0..phi_n`` with the grid's quadrature."""
    v = np.asarray(values, dtype=float)
    if v.shape != (grid.M,):
        raise InputError(f"expected {grid.M} grid values, got shape {v.shape}")
    if n < 0:
        raise InputError("mode count must be non-negative")
    return SpectralCoeffs(grid.table(n, 0) @ (grid.weights * v), grid.length_L)


def project(func, grid: QuadratureGrid, n: int) -> SpectralCoeffs:
    """Project a callable ``func(x)`` onto the first ``n+1`` modes."""
    return analyze(func(grid.nodes), grid, n)


def wavenumbers(n: int, L: float) -> np.ndarray:
    """``k pi / L`` for k = 0..n."""
    return np.arange(n + 1) * np.pi / L
