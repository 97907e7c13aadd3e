"""Mobility cutoff and entropy densities.

``a_eps`` replaces the degenerate mobility ``s`` by ``s + eps`` on s >= 0 and by
the constant ``eps`` below zero. ``phi_eps`` is the convex entropy density with
``phi_eps'' = 1 / a_eps``; on negative arguments it grows like s^2 / (2 eps),
which is what penalises negative film heights.

All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class RegEps:
    eps: float

    def __post_init__(self):
        e = float(self.eps)
        if not (0.0 < e <= 1.0):
            raise InputError(f"regularisation parameter must lie in (0, 1], got {self.eps}")
        object.__setattr__(self, "eps", e)

    def __float__(self):
        return self.eps


def _eps(eps) -> float:
    return eps.eps if isinstance(eps, RegEps) else float(RegEps(eps).eps)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def a_eps(s, eps):
    """Regularised mobility: ``s + eps`` for s >= 0, ``eps`` for s < 0."""
    e = _eps(eps)
    s = np.asarray(s, dtype=float)
    return _out(np.where(s >= 0.0, s + e, e))


def phi(s):
    """Entropy density ``s ln s - s + 1`` on s >= 0, continuously extended by phi(0) = 1."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0) or np.any(np.isnan(s)):
        raise InputError("phi is only defined for s >= 0; use phi_eps for signed arguments")
    with np.errstate(divide="ignore", invalid="ignore"):
        slog = np.where(s > 0.0, s * np.log(np.where(s > 0.0, s, 1.0)), 0.0)
    return _out(slog - s + 1.0)


def phi_eps(s, eps, deriv=0):
    """Regularised entropy density and its first two derivatives.

    deriv=0::

        (s+eps) ln(s+eps) - (s+eps) + 1                    s >= 0
        s^2/(2 eps) + s ln(eps) + eps ln(eps) - eps + 1    s < 0

    deriv=1 gives ``ln(s+eps)`` / ``s/eps + ln(eps)``, deriv=2 gives ``1/a_eps(s)``.
    """
    e = _eps(eps)
    s = np.asarray(s, dtype=float)
    pos = s >= 0.0
    sp = np.where(pos, s, 0.0) + e
    log_e = np.log(e)
    if deriv == 0:
        upper = sp * np.log(sp) - sp + 1.0
        lower = s * s / (2.0 * e) + s * log_e + e * log_e - e + 1.0
    elif deriv == 1:
        upper = np.log(sp)
        lower = s / e + log_e
    elif deriv == 2:
        upper = 1.0 / sp
        lower = np.full_like(s, 1.0 / e)
    else:
        raise InputError(f"derivative order must be 0, 1 or 2, got {deriv}")
    return _out(np.where(pos, upper, lower))
