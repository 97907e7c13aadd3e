"""Adaptive time stepping for the Galerkin coefficient ODE.

Three schemes share one step interface:

``semi_implicit_spectral`` (default)
    Per mode, the field is split as ``-S_j (F_j, G_j) + remainder`` where
    ``S_j = (j pi/L)^4 [[c_f A, c_f B], [c_g, c_g]]`` with frozen mobilities
    ``c_f = max a_eps(f)``, ``c_g = max a_eps(g)``. The stiff part is solved
    implicitly (closed-form 2x2 inverse per mode), the remainder explicitly.
    Error estimate by step doubling; ``extrapolate=True`` returns the
    Richardson combination ``2 u_half - u_full`` (second order) instead of the
    two half steps.
``fully_implicit_euler``
    Backward Euler, simplified Newton with the finite-difference Jacobian,
    step doubling for the error estimate.
``explicit_adaptive``
    Bogacki-Shampine 3(2) pair with the step capped by ``safety / max_rate``.

The mean modes (index 0 of f and g) are never touched: they are copied from
the input state, so masses are conserved to the bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .basis import QuadratureGrid
from .diagnostics import DiagnosticsRecord, record
from .dynamics import GalerkinModel, PhysParams, State
from .errors import InputError, IntegrationError, NumericalOverflowError, StepRejected

log = logging.getLogger(__name__)

SCHEMES = ("semi_implicit_spectral", "fully_implicit_euler", "explicit_adaptive")


@dataclass(frozen=True)
class StepControls:
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    dt_init: float = 1e-6
    dt_min: float = 1e-14
    dt_max: float = 1e-2
    max_newton_iters: int = 10
    scheme: str = "semi_implicit_spectral"
    safety: float = 1.0
    extrapolate: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InputError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InputError("tolerances must be positive")
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise InputError("need 0 < dt_min <= dt_init <= dt_max")
        if self.max_newton_iters < 1:
            raise InputError("max_newton_iters must be positive")
        if not self.safety > 0:
            raise InputError("safety factor must be positive")


def _error_norm(err, u_old, u_new, controls: StepControls, skip) -> float:
    scale = controls.abs_tol + controls.rel_tol * np.maximum(np.abs(u_old), np.abs(u_new))
    ratio = np.delete(err / scale, skip)
    return float(np.sqrt(np.mean(ratio**2))) if ratio.size else 0.0


class Stepper:
    """Single-step engine bound to one model and one set of controls."""

    def __init__(self, model: GalerkinModel, controls: StepControls):
        self.model = model
        self.controls = controls
        self.mean_idx = (0, model.n + 1)

    @property
    def order(self) -> int:
        return 3 if self.controls.scheme == "explicit_adaptive" else 1

    def stability_limit(self, u) -> float:
        rate = self.model.max_rate(u)
        return np.inf if rate == 0 else self.controls.safety / rate

    def _pin_means(self, u_new, u_old):
        for i in self.mean_idx:
            u_new[i] = u_old[i]
        return u_new

    def _semi_implicit(self, u, dt):
        m = self.model
        r = m.rhs(u)
        S = m.stiff_blocks(*m.stiff_coefficients(u))
        F, G = m.split(u)
        remainder_f = r[: m.n + 1] + S[:, 0, 0] * F + S[:, 0, 1] * G
        remainder_g = r[m.n + 1 :] + S[:, 1, 0] * F + S[:, 1, 1] * G
        bf = F + dt * remainder_f
        bg = G + dt * remainder_g
        m00 = 1.0 + dt * S[:, 0, 0]
        m01 = dt * S[:, 0, 1]
        m10 = dt * S[:, 1, 0]
        m11 = 1.0 + dt * S[:, 1, 1]
        det = m00 * m11 - m01 * m10
        new = np.concatenate([(m11 * bf - m01 * bg) / det, (m00 * bg - m10 * bf) / det])
        return self._pin_means(new, u)

    def _backward_euler(self, u, dt):
        m = self.model
        r0 = m.rhs(u)
        J = m.jacobian(u, base=r0)
        lhs = np.eye(m.size) - dt * J
        v = u + dt * r0
        for _ in range(self.controls.max_newton_iters):
            res = v - u - dt * m.rhs(v)
            delta = np.linalg.solve(lhs, -res)
            v = self._pin_means(v + delta, u)
            if _error_norm(delta, u, v, self.controls, self.mean_idx) < 1e-3:
                return v
        raise StepRejected(f"Newton did not converge in {self.controls.max_newton_iters} iterations (dt={dt:g})")

    def _doubled(self, single, u, dt):
        full = single(u, dt)
        half = single(single(u, 0.5 * dt), 0.5 * dt)
        err = _error_norm(half - full, u, half, self.controls, self.mean_idx)
        if self.controls.extrapolate:
            # local Richardson extrapolation; the error estimate stays that of the first-order step
            half = self._pin_means(2.0 * half - full, u)
        return half, err

    def _bogacki_shampine(self, u, dt):
        if dt > 2.0 * self.stability_limit(u):
            raise StepRejected(f"dt={dt:g} exceeds the explicit stability bound")
        f = self.model.rhs
        k1 = f(u)
        k2 = f(u + 0.5 * dt * k1)
        k3 = f(u + 0.75 * dt * k2)
        y3 = u + dt * (2 / 9 * k1 + 1 / 3 * k2 + 4 / 9 * k3)
        k4 = f(y3)
        y2 = u + dt * (7 / 24 * k1 + 1 / 4 * k2 + 1 / 3 * k3 + 1 / 8 * k4)
        y3 = self._pin_means(y3, u)
        return y3, _error_norm(y3 - y2, u, y3, self.controls, self.mean_idx)

    def step_vector(self, u, dt):
        scheme = self.controls.scheme
        if scheme == "semi_implicit_spectral":
            return self._doubled(self._semi_implicit, u, dt)
        if scheme == "fully_implicit_euler":
            return self._doubled(self._backward_euler, u, dt)
        return self._bogacki_shampine(u, dt)


def step(state: State, dt: float, phys: PhysParams, eps, grid: QuadratureGrid, controls: StepControls,
         thin_film: bool = False):
    """Advance ``state`` by ``dt``; returns ``(next_state, err_est)``.

    ``err_est`` is the scaled error norm (<= 1 means the step meets the
    tolerances). Raises StepRejected when Newton fails or an explicit step
    violates the stability bound.
    """
    if not (controls.dt_min <= dt <= controls.dt_max):
        raise InputError(f"dt={dt:g} outside [{controls.dt_min:g}, {controls.dt_max:g}]")
    stepper = Stepper(GalerkinModel(phys, eps, grid, state.n, thin_film=thin_film), controls)
    u_new, err = stepper.step_vector(state.vector, dt)
    return State.from_vector(u_new, state.L, state.t + dt), err


def integrate(
    initial: State,
    T_end: float,
    sample_times: Sequence[float],
    phys: PhysParams,
    eps,
    grid: QuadratureGrid,
    controls: StepControls,
    sink: Optional[Callable[[DiagnosticsRecord], None]] = None,
    on_sample: Optional[Callable[[State], None]] = None,
    thin_film: bool = False,
) -> State:
    """Integrate from ``initial.t`` to ``T_end``, landing exactly on every sample time.

    At each sample a DiagnosticsRecord is passed to ``sink`` and the state to
    ``on_sample``. On failure an IntegrationError carrying the last sampled
    state is raised; records already emitted stay with the sink.
    """
    t0 = initial.t
    samples = [float(s) for s in sample_times]
    if any(b < a for a, b in zip(samples, samples[1:])):
        raise InputError("sample times must be sorted")
    if T_end < t0 or any(s < t0 or s > T_end for s in samples):
        raise InputError("sample times must lie in [initial.t, T_end]")
    targets = sorted(set(samples) | {float(T_end)})
    sample_set = set(samples)

    model = GalerkinModel(phys, eps, grid, initial.n, thin_film=thin_film)
    stepper = Stepper(model, controls)
    p = stepper.order
    u = initial.vector.copy()
    t = float(t0)
    dt = controls.dt_init
    dt_last = controls.dt_init
    last_sampled = initial
    n_accept = n_reject = 0

    def emit(state):
        nonlocal last_sampled
        if sink is not None:
            sink(record(state, phys, eps, grid, dt_last))
        if on_sample is not None:
            on_sample(state)
        last_sampled = state

    for target in targets:
        while t < target:
            h = min(dt, controls.dt_max, target - t)
            if controls.scheme == "explicit_adaptive":
                h = min(h, stepper.stability_limit(u))
            clipped = h < dt
            try:
                u_new, err = stepper.step_vector(u, h)
            except (StepRejected, NumericalOverflowError) as exc:
                n_reject += 1
                dt = 0.5 * h
                log.debug("step rejected at t=%g: %s", t, exc)
                if dt < controls.dt_min:
                    raise IntegrationError(f"step size fell below dt_min at t={t:g}: {exc}", last_sampled, dt) from exc
                continue
            fac = 0.9 * err ** (-1.0 / (p + 1)) if err > 0 else 5.0
            if err <= 1.0:
                n_accept += 1
                u = u_new
                t = target if h == target - t else t + h
                dt_last = h
                new_dt = h * min(5.0, fac)
                dt = max(dt, new_dt) if clipped else new_dt
            else:
                n_reject += 1
                dt = h * max(0.1, fac)
                if dt < controls.dt_min:
                    raise IntegrationError(f"step size fell below dt_min at t={t:g}", last_sampled, dt)
        if target in sample_set:
            emit(initial if target == t0 else State.from_vector(u, initial.L, t))

    log.info("integration to T=%g done: %d accepted, %d rejected steps", T_end, n_accept, n_reject)
    if t == t0:
        return initial
    return State.from_vector(u, initial.L, t)
