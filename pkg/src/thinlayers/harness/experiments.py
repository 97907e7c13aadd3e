"""Experiment drivers: single runs, eps sweeps, mode refinement, thin-film
reduction and the linearised decay check.

Every driver writes its artifacts below ``config.out_dir`` (when ``write`` is
true) and returns an in-memory result. Member runs of a sweep share nothing
mutable, so they may be farmed out to worker processes.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path

import numpy as np

from ..basis import SpectralCoeffs, make_grid, synthesize
from ..diagnostics import DiagnosticsRecord, dissipation1, energy2_eps
from ..dynamics import GalerkinModel, PhysParams, State, flat_linearization
from ..errors import InputError, IntegrationError
from ..integrator import StepControls, integrate
from ..regularization import RegEps, phi_eps
from . import artifacts
from .config import RunConfig, save_config
from .initial_data import initial_state, projection_undershoot

log = logging.getLogger(__name__)

MASS_RTOL = 1e-13
INEQ_RTOL = 1e-3
ENERGY_SLACK_FACTOR = 10.0
CONSISTENCY_SLACK = 1e-3


@dataclass
class RunResult:
    config: RunConfig
    records: list[DiagnosticsRecord]
    states: list[State]
    summary: dict
    failed: bool = False
    error: str | None = None

    @property
    def passed(self) -> bool:
        return not self.failed and all(c["pass"] for c in self.summary["checks"].values())

    @property
    def final(self) -> State:
        return self.states[-1]


def _column(records, name):
    return np.array([getattr(r, name) for r in records], dtype=float)


def check_mass(records) -> dict:
    out = {"pass": True}
    for ch in ("f", "g"):
        m = _column(records, f"mass_{ch}")
        dev = float(np.max(np.abs(m - m[0])))
        out[f"max_dev_{ch}"] = dev
        out["pass"] = bool(out["pass"] and dev <= MASS_RTOL * abs(m[0]))
    return out


def check_energy(records, rel_tol: float) -> dict:
    """Surface-energy decay with dissipation.

    Monotonicity is required between consecutive samples where both layers are
    positive, with slack ``10 rel_tol max(E1(0), 1) dt``; the time-integrated
    balance ``E1(T) + int D1 <= E1(0)`` gets slack ``1e-3 max(E1(0), 1)``.
    """
    t = _column(records, "t")
    E1 = _column(records, "E1")
    D1 = _column(records, "D1")
    pos = (_column(records, "min_f") > 0) & (_column(records, "min_g") > 0)
    both = pos[1:] & pos[:-1]
    slack = ENERGY_SLACK_FACTOR * rel_tol * max(E1[0], 1.0) * np.diff(t)
    excess = np.where(both, np.diff(E1) - slack, -np.inf)
    worst = float(np.max(excess)) if excess.size else -math.inf
    diss = float(np.trapezoid(D1, t))
    balance = E1[-1] + diss - E1[0]
    return {
        "pass": bool(worst <= 0.0 and balance <= INEQ_RTOL * max(E1[0], 1.0)),
        "max_increase_over_slack": worst if math.isfinite(worst) else None,
        "E1_0": float(E1[0]),
        "E1_T": float(E1[-1]),
        "int_D1": diss,
        "balance": float(balance),
        "identity_rel_error": float(abs(balance) / E1[0]) if E1[0] > 0 else 0.0,
    }


def check_entropy(records) -> dict:
    t = _column(records, "t")
    E2 = _column(records, "E2eps")
    D2 = _column(records, "D2")
    diss = float(np.trapezoid(D2, t))
    lhs = E2[-1] + diss
    bound = E2[0] + INEQ_RTOL * max(E2[0], 1.0)
    return {"pass": bool(lhs <= bound), "E2eps_0": float(E2[0]), "E2eps_T": float(E2[-1]),
            "int_D2": diss, "lhs": float(lhs), "bound": float(bound)}


def quadrature_error(state: State, cfg: RunConfig) -> dict:
    """Change in the vector field and nonlinear functionals when the grid is doubled."""
    out = {}
    grids = [make_grid(cfg.M, cfg.L, cfg.quadrature_rule), make_grid(2 * cfg.M, cfg.L, cfg.quadrature_rule)]
    rhs = [GalerkinModel(cfg.phys, cfg.eps, gr, cfg.n).rhs(state.vector) for gr in grids]
    scale = max(np.max(np.abs(rhs[1])), np.finfo(float).tiny)
    out["rhs_rel"] = float(np.max(np.abs(rhs[0] - rhs[1])) / scale)
    out["E2eps_abs"] = float(abs(energy2_eps(state, cfg.eps, cfg.phys, grids[0])
                                 - energy2_eps(state, cfg.eps, cfg.phys, grids[1])))
    out["D1_abs"] = float(abs(dissipation1(state, cfg.phys, cfg.eps, grids[0])
                              - dissipation1(state, cfg.phys, cfg.eps, grids[1])))
    return out


def _summarise(cfg, records, initial, grid, failed, error):
    summary = {
        "status": "failed" if failed else "completed",
        "error": error,
        "config": cfg.to_dict(),
        "samples": len(records),
        "projection_undershoot": projection_undershoot(initial, grid),
        "quadrature_error": quadrature_error(initial, cfg),
        "checks": {},
    }
    if len(records) >= 2:
        summary["checks"] = {
            "mass": check_mass(records),
            "entropy": check_entropy(records),
            "energy": check_energy(records, cfg.controls.rel_tol),
        }
    return summary


def run(cfg: RunConfig, write: bool = True, initial: State | None = None, thin_film: bool = False) -> RunResult:
    """Integrate one configuration and (optionally) write its artifacts.

    Files written to ``cfg.out_dir``: ``config.json``, ``timeseries.csv``,
    ``snapshot_initial.json``, ``snapshot_final.json``, ``summary.json``.
    An integrator failure keeps the partial time series and the last sampled
    snapshot and marks the result as failed.
    """
    grid = cfg.grid()
    state0 = initial if initial is not None else initial_state(cfg, grid)
    records: list[DiagnosticsRecord] = []
    states: list[State] = []
    failed, error = False, None
    try:
        integrate(state0, cfg.T_end, cfg.sample_times(), cfg.phys, cfg.eps, grid, cfg.controls,
                  sink=records.append, on_sample=states.append, thin_film=thin_film)
    except IntegrationError as exc:
        failed, error = True, str(exc)
        log.error("run failed: %s", exc)
    summary = _summarise(cfg, records, state0, grid, failed, error)
    result = RunResult(cfg, records, states, summary, failed, error)
    if write:
        write_run(result, state0)
    return result


def write_run(result: RunResult, initial: State) -> Path:
    cfg = result.config
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.json")
    artifacts.write_timeseries(result.records, out / "timeseries.csv")
    artifacts.write_snapshot(initial, cfg.phys, cfg.eps, out / "snapshot_initial.json")
    if result.states:
        artifacts.write_snapshot(result.states[-1], cfg.phys, cfg.eps, out / "snapshot_final.json")
    artifacts.write_json(result.summary, out / "summary.json")
    return out


def _run_many(configs, workers: int, write: bool):
    job = partial(run, write=write)
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, configs))
    return [job(c) for c in configs]


# ---------------------------------------------------------------------------
# eps sweep


@dataclass
class SweepResult:
    rows: list[dict]
    slope: float | None
    flags: dict
    runs: list[RunResult] = field(repr=False, default_factory=list)

    @property
    def passed(self) -> bool:
        return self.flags["complete"] and self.flags["monotone"] and self.flags["consistent"]


def entropy_consistency(records, eps, w_min) -> tuple[bool, float]:
    """Single-node bound ``phi_eps(min_f) w_min <= E2eps(0) + 1e-3`` at every sample.

    Returns ``(ok, worst margin)``; the margin is lhs minus rhs (negative is good).
    """
    E0 = records[0].E2eps
    lhs = np.array([phi_eps(r.min_f, eps) * w_min for r in records])
    margin = float(np.max(lhs - (E0 + CONSISTENCY_SLACK)))
    return margin <= 0.0, margin


def eps_sweep(base: RunConfig, eps_list, workers: int = 1, write: bool = True) -> SweepResult:
    """One run per eps (decreasing), measuring how negative f gets.

    The hard checks are that the negativity ``max(0, -min_f)`` does not grow as
    eps decreases and the single-node entropy bound at every sample. The
    least-squares slope of log(negativity) against log(eps) is reported only.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(not 0 < e <= 1 for e in eps_list):
        raise InputError("eps values must lie in (0, 1]")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InputError("eps values must be strictly decreasing")
    root = Path(base.out_dir)
    configs = [replace(base, eps=e, out_dir=str(root / f"eps_{i:02d}_{e:.0e}")) for i, e in enumerate(eps_list)]
    runs = _run_many(configs, workers, write)
    w_min = base.grid().w_min

    rows = []
    for e, res in zip(eps_list, runs):
        if res.failed or not res.records:
            rows.append({"eps": e, "status": "failed", "error": res.error})
            continue
        mins = _column(res.records, "min_f")
        ok, margin = entropy_consistency(res.records, e, w_min)
        rows.append({
            "eps": e,
            "status": "completed",
            "min_f": float(mins.min()),
            "negativity": float(max(0.0, -mins.min())),
            "min_f_t_pos": float(mins[1:].min()) if mins.size > 1 else float(mins[0]),
            "E2eps_0": res.records[0].E2eps,
            "consistency_ok": ok,
            "consistency_margin": margin,
        })
    done = [r for r in rows if r["status"] == "completed"]
    neg = np.array([r["negativity"] for r in done])
    flags = {
        "complete": len(done) == len(rows),
        "monotone": bool(np.all(np.diff(neg) <= 0.0)),
        "consistent": all(r["consistency_ok"] for r in done),
        "non_degenerate": bool(done) and all(r["min_f"] > 0 for r in done),
    }
    slope = None
    if len(done) >= 2 and np.all(neg > 0):
        slope = float(np.polyfit(np.log([r["eps"] for r in done]), np.log(neg), 1)[0])
    flags["slope_at_least_0.4"] = slope is not None and slope >= 0.4
    result = SweepResult(rows, slope, flags, runs)
    if write:
        root.mkdir(parents=True, exist_ok=True)
        _write_table(rows, root / "eps_sweep.csv")
        artifacts.write_json({"rows": rows, "slope": slope, "flags": flags, "config": base.to_dict()},
                             root / "sweep_summary.json")
    return result


def _write_table(rows, path):
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (format(v, ".17g") if isinstance(v, float) else v) for k, v in r.items()})


# ---------------------------------------------------------------------------
# mode refinement


@dataclass
class RefinementResult:
    n_list: list[int]
    differences: list[float]
    orders: list[float | None]
    runs: list[RunResult] = field(repr=False, default_factory=list)

    @property
    def strictly_decreasing(self) -> bool:
        d = self.differences
        return all(b < a for a, b in zip(d, d[1:]))


def refinement_study(base: RunConfig, n_list, workers: int = 1, write: bool = True) -> RefinementResult:
    """Successive max-coefficient differences of the final state as n grows.

    Each member projects the same initial profile onto its own n modes with
    ``M = (base.M / (base.n + 1)) (n + 1)`` nodes.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InputError("n_list must be increasing with at least two entries")
    ratio = base.M // (base.n + 1)
    root = Path(base.out_dir)
    configs = [replace(base, n=n, M=ratio * (n + 1), out_dir=str(root / f"n_{n:03d}")) for n in n_list]
    runs = _run_many(configs, workers, write)
    for r in runs:
        if r.failed:
            raise IntegrationError(f"refinement member n={r.config.n} failed: {r.error}")
    n_max = n_list[-1]
    finals = [r.final.padded(n_max).vector for r in runs]
    diffs = [float(np.max(np.abs(b - a))) for a, b in zip(finals, finals[1:])]
    orders: list[float | None] = []
    for i in range(len(diffs) - 1):
        if diffs[i] > 0 and diffs[i + 1] > 0:
            orders.append(math.log(diffs[i] / diffs[i + 1]) / math.log(n_list[i + 2] / n_list[i + 1]))
        else:
            orders.append(None)
    result = RefinementResult(n_list, diffs, orders, runs)
    if write:
        root.mkdir(parents=True, exist_ok=True)
        rows = [{"n_coarse": a, "n_fine": b, "max_coeff_diff": d} for a, b, d in zip(n_list, n_list[1:], diffs)]
        _write_table(rows, root / "refinement.csv")
        artifacts.write_json({"n_list": n_list, "differences": diffs, "orders": orders,
                              "strictly_decreasing": result.strictly_decreasing, "config": base.to_dict()},
                             root / "refinement_summary.json")
    return result


# ---------------------------------------------------------------------------
# thin-film reduction


@dataclass
class TFEReport:
    eps: float
    sup_f: float
    sup_g_diff: float
    stability_constant: float | None
    coupled: RunResult = field(repr=False, default=None)
    single: RunResult = field(repr=False, default=None)

    def to_dict(self):
        return {"eps": self.eps, "sup_f": self.sup_f, "sup_g_diff": self.sup_g_diff,
                "stability_constant": self.stability_constant}


def tfe_reduction(base: RunConfig, write: bool = True) -> TFEReport:
    """Compare the coupled system started from f = 0 with the scalar thin-film flow of g.

    The f-channel of the initial state is zeroed; the single-equation run uses
    the same basis, grid, samples and integrator with the f-channel frozen.
    """
    grid = base.grid()
    s0 = initial_state(base, grid)
    s0 = State(SpectralCoeffs(np.zeros(base.n + 1), base.L), s0.g, 0.0)
    root = Path(base.out_dir)
    coupled = run(replace(base, out_dir=str(root / "coupled")), write=write, initial=s0)
    single = run(replace(base, out_dir=str(root / "single")), write=write, initial=s0, thin_film=True)
    for r in (coupled, single):
        if r.failed:
            raise IntegrationError(f"thin-film comparison run failed: {r.error}")
    sup_f = max(float(np.max(np.abs(synthesize(s.f, grid)))) for s in coupled.states)
    sup_dg = max(float(np.max(np.abs(synthesize(a.g, grid) - synthesize(b.g, grid))))
                 for a, b in zip(coupled.states, single.states))
    report = TFEReport(base.eps, sup_f, sup_dg, sup_dg / sup_f if sup_f > 0 else None, coupled, single)
    if write:
        root.mkdir(parents=True, exist_ok=True)
        artifacts.write_json({**report.to_dict(), "config": base.to_dict()}, root / "tfe_report.json")
    return report


# ---------------------------------------------------------------------------
# linearised decay


def block_eigenvalues(block) -> np.ndarray:
    """Eigenvalues of a real 2x2 matrix by the quadratic formula, sorted ascending by real part."""
    (a, b), (c, d) = np.asarray(block, dtype=float)
    tr, det = a + d, a * d - b * c
    disc = complex(tr * tr - 4.0 * det) ** 0.5
    lams = np.array([(tr - disc) / 2.0, (tr + disc) / 2.0])
    if np.all(np.abs(lams.imag) == 0):
        lams = lams.real
    return np.sort_complex(lams) if np.iscomplexobj(lams) else np.sort(lams)


def fit_exponents(times, traj) -> np.ndarray:
    """Decay exponents of a 2-component linear trajectory from uniform samples.

    Fits the one-step propagator ``u(t + dt) = P u(t)`` by least squares and
    returns ``log(eig(P)) / dt``.
    """
    times = np.asarray(times)
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise InputError("exponent fit needs uniform sampling")
    X, Y = traj[:-1].T, traj[1:].T
    P = Y @ np.linalg.pinv(X)
    mu = np.linalg.eigvals(P).astype(complex)
    lam = np.log(mu) / dt[0]
    if np.all(np.abs(lam.imag) < 1e-12 * np.abs(lam.real).max()):
        return np.sort(lam.real)
    return np.sort_complex(lam)


def linear_decay_check(phys: PhysParams, eps, j: int, fbar: float, gbar: float, amp: float,
                       n: int | None = None, horizon: float = 1.0, sample_count: int = 101,
                       controls: StepControls | None = None, rtol: float = 0.02) -> dict:
    """Perturb the flat state (fbar, gbar) in mode j and compare the measured
    decay exponents with the eigenvalues of the 2x2 linearisation block.

    Integrates to ``T = horizon / (j pi / L)^4`` with uniform samples.
    """
    e = RegEps(eps).eps
    if j < 1:
        raise InputError("decay check needs a mode index j >= 1")
    block = flat_linearization(phys, e, fbar, gbar, j)
    expected = block_eigenvalues(block)
    report = {"A": phys.A, "B": phys.B, "L": phys.L, "eps": e, "j": j, "fbar": fbar, "gbar": gbar,
              "amp": amp, "expected": expected.tolist()}
    if amp == 0:
        report.update(status="stationary", measured=None, rel_error=None, passed=None)
        return report
    n = n if n is not None else 2 * j + 2
    L = phys.L
    grid = make_grid(8 * (n + 1), L, n=n)
    F = np.zeros(n + 1)
    G = np.zeros(n + 1)
    F[0], G[0] = fbar * math.sqrt(L), gbar * math.sqrt(L)
    F[j], G[j] = amp, -amp
    state = State.from_vector(np.concatenate([F, G]), L)
    T = horizon / (j * math.pi / L) ** 4
    times = np.linspace(0.0, T, sample_count)
    controls = controls or StepControls(rel_tol=1e-9, abs_tol=1e-15, dt_init=1e-9, dt_max=T / 10)
    traj, recs = [], []
    integrate(state, T, times, phys, e, grid, controls, sink=recs.append,
              on_sample=lambda s: traj.append((s.f.coeffs[j], s.g.coeffs[j])))
    if min(min(r.min_f, r.min_g) for r in recs) <= 0.0:
        report.update(status="aborted", reason="a layer became non-positive", measured=None,
                      rel_error=None, passed=False)
        return report
    measured = fit_exponents(times, np.array(traj))
    rel = np.abs(measured - expected) / np.abs(expected)
    report.update(status="measured", T=T, measured=measured.tolist(), rel_error=rel.tolist(),
                  passed=bool(np.all(rel <= rtol)))
    return report
