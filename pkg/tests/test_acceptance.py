"""End-to-end acceptance checks, one test per criterion.

Each test prints a PASS/FAIL line (also collected into the terminal summary)
before asserting, so a failing criterion still reports its measured numbers.
"""

import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import oracles
from thinlayers.basis import SpectralCoeffs, make_grid
from thinlayers.diagnostics import weak_residual
from thinlayers.dynamics import PhysParams, State, assemble_rhs
from thinlayers.harness import (
    InitialDataSpec,
    RunConfig,
    eps_sweep,
    linear_decay_check,
    refinement_study,
    run,
    tfe_reduction,
)
from thinlayers.integrator import StepControls

PHYS = PhysParams(A=2.0, B=1.0, L=1.0)
COMPACT = InitialDataSpec("compact_support_touching_zero")

# default cosine_bump data: f0 = 1 + 0.4 cos(pi x), g0 = 1 + 0.3 cos(2 pi x), so min f0, g0 >= 0.6
SMOKE = RunConfig(n=16, eps=0.1, phys=PHYS, T_end=1.0, sample_count=1201, initial=InitialDataSpec("cosine_bump"))


def column(records, name):
    return np.array([getattr(r, name) for r in records])


@pytest.fixture(scope="module")
def smoke(tmp_path_factory):
    return run(replace(SMOKE, out_dir=str(tmp_path_factory.mktemp("smoke_a"))))


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    base = RunConfig(n=16, phys=PHYS, T_end=0.1, sample_count=400, initial=COMPACT,
                     out_dir=str(tmp_path_factory.mktemp("sweep")))
    return eps_sweep(base, [1e-1, 1e-2, 1e-3], workers=3)


def entropy_balance(records):
    t = column(records, "t")
    E2 = column(records, "E2eps")
    lhs = E2[-1] + np.trapezoid(column(records, "D2"), t)
    return lhs, E2[0] + 1e-3 * max(E2[0], 1.0)


def test_criterion_1_mass(smoke, acceptance_report):
    devs = {}
    ok = not smoke.failed
    for ch in ("f", "g"):
        m = column(smoke.records, f"mass_{ch}")
        devs[ch] = float(np.max(np.abs(m - m[0])) / abs(m[0]))
        ok = ok and devs[ch] <= 1e-13
    acceptance_report(1, "mass conservation", ok,
                      f"max rel deviation f={devs['f']:.1e} g={devs['g']:.1e} over {len(smoke.records)} samples")
    assert ok


def test_criterion_2_energy(smoke, acceptance_report):
    rec = smoke.records
    t, E1, D1 = column(rec, "t"), column(rec, "E1"), column(rec, "D1")
    assert min(rec[0].min_f, rec[0].min_g) >= 0.5
    positive = bool(np.all(column(rec, "min_f") > 0) and np.all(column(rec, "min_g") > 0))
    slack = 10 * SMOKE.controls.rel_tol * E1[0] * np.diff(t)
    worst = float(np.max(np.diff(E1) - slack))
    identity = abs(E1[-1] - E1[0] + np.trapezoid(D1, t)) / E1[0]
    ok = positive and worst <= 0.0 and identity <= 1e-3
    acceptance_report(2, "energy decay", ok,
                      f"worst step increase minus slack={worst:.2e}, |dE1 + int D1|/E1(0)={identity:.2e}")
    assert ok


def test_criterion_3_entropy(smoke, sweep, acceptance_report):
    degenerate = sweep.runs[0]
    assert degenerate.records[0].min_f <= 0.0  # the data really touches zero
    parts = []
    ok = True
    for name, res in (("smoke", smoke), ("degenerate", degenerate)):
        lhs, bound = entropy_balance(res.records)
        ok = ok and not res.failed and lhs <= bound
        parts.append(f"{name}: lhs={lhs:.6g} bound={bound:.6g}")
    acceptance_report(3, "entropy inequality", ok, "; ".join(parts))
    assert ok


def test_criterion_4_negativity(sweep, acceptance_report):
    rows = sweep.rows
    neg = [r.get("negativity") for r in rows]
    ok = sweep.flags["complete"] and sweep.flags["monotone"] and sweep.flags["consistent"]
    margins = ", ".join(f"{r['consistency_margin']:.2e}" for r in rows if "consistency_margin" in r)
    slope = "n/a" if sweep.slope is None else f"{sweep.slope:.3f}"
    acceptance_report(4, "negativity control", ok,
                      f"|min_f|={['%.3e' % v for v in neg]}, consistency margins [{margins}], "
                      f"fitted slope {slope} (soft expectation >= 0.4)")
    assert ok


def test_criterion_5_linear_decay(acceptance_report):
    rep = linear_decay_check(PHYS, 0.1, j=1, fbar=1.0, gbar=1.0, amp=1e-3)
    ok = rep["status"] == "measured" and rep["passed"]
    # independent check of the reference eigenvalues
    k4 = math.pi**4
    ref = oracles.quadratic_roots(-k4 * 2.2, -k4 * 1.1, -k4 * 1.1, -k4 * 1.1)
    ok = ok and np.allclose(rep["expected"], [z.real for z in ref], rtol=1e-12)
    acceptance_report(5, "linearised decay", ok,
                      f"expected {np.round(rep['expected'], 3).tolist()}, measured "
                      f"{np.round(rep['measured'], 3).tolist()}, rel error {max(rep['rel_error']):.1e}")
    assert ok


def test_criterion_6_vector_field(acceptance_report):
    rng = np.random.default_rng(2024)
    n, eps = 4, 0.1
    fine = make_grid(4096, 1.0)
    worst = 0.0
    for _ in range(100):
        F = rng.standard_normal(n + 1)
        G = rng.standard_normal(n + 1)
        F[0], G[0] = rng.uniform(0.0, 1.5, 2)
        s = State(SpectralCoeffs(F, 1.0), SpectralCoeffs(G, 1.0))
        dF, dG = assemble_rhs(s, PHYS, eps, fine)
        rF, rG = oracles.galerkin_field_double_sum(F, G, PHYS.A, PHYS.B, 1.0, eps, M=4096)
        scale = max(np.abs(rF).max(), np.abs(rG).max())
        worst = max(worst, np.abs(dF - rF).max() / scale, np.abs(dG - rG).max() / scale)
    ok = worst <= 1e-8
    acceptance_report(6, "Galerkin vector field", ok, f"max rel deviation {worst:.1e} over 100 states (n=4, M=4096)")
    assert ok


def test_criterion_7_thin_film(tmp_path, acceptance_report):
    base = RunConfig(n=16, phys=PHYS, T_end=1.0,
                     initial=InitialDataSpec("cosine_bump", {"g_level": 1.0, "g_amp": 0.5, "g_mode": 1}))
    reports = [tfe_reduction(replace(base, eps=e, out_dir=str(tmp_path / f"eps_{e:g}"))) for e in (1e-2, 1e-3)]
    ratio = reports[0].sup_f / reports[1].sup_f
    ok = 10 / 3 <= ratio <= 30
    detail = ", ".join(f"eps={r.eps:g}: sup|f|={r.sup_f:.3e} sup|g-g_tfe|={r.sup_g_diff:.3e}" for r in reports)
    acceptance_report(7, "thin-film reduction", ok, f"sup|f| ratio {ratio:.2f} (target 10, factor 3); {detail}")
    assert ok


def test_criterion_8_self_convergence(tmp_path, acceptance_report):
    controls = StepControls(extrapolate=True)
    base = RunConfig(n=16, phys=PHYS, T_end=0.01, sample_count=21, initial=COMPACT, controls=controls,
                     out_dir=str(tmp_path / "refine"))
    ref = refinement_study(base, [8, 16, 32], workers=3)

    residuals = []
    for e, count in ((1e-1, 21), (1e-2, 81), (1e-3, 321)):
        cfg = RunConfig(n=16, eps=e, phys=PHYS, T_end=0.1, sample_count=count, controls=controls,
                        out_dir=str(tmp_path / f"weak_{e:g}"))
        res = run(cfg, write=False)
        grid = cfg.grid()
        residuals.append([max(map(abs, weak_residual(res.states, PHYS, j, cfg.T_end, grid))) for j in (1, 2, 3)])
    r = np.array(residuals)
    weak_ok = bool(np.all(np.diff(r, axis=0) < 0))
    ok = ref.strictly_decreasing and weak_ok
    acceptance_report(8, "self-convergence", ok,
                      f"n=(8,16,32) differences {['%.2e' % d for d in ref.differences]}; "
                      "max weak residual j=1..3 at (eps, samples) = (1e-1, 21), (1e-2, 81), (1e-3, 321): "
                      + " -> ".join("[" + " ".join(f"{v:.1e}" for v in row) + "]" for row in r))
    assert ok


def test_criterion_9_determinism(smoke, tmp_path, acceptance_report):
    again = run(replace(SMOKE, out_dir=str(tmp_path)))
    a = (tmp_path / "timeseries.csv").read_bytes()
    b = (Path(smoke.config.out_dir) / "timeseries.csv").read_bytes()
    ok = a == b and not again.failed
    acceptance_report(9, "determinism", ok, f"{len(a)} bytes, identical={a == b}")
    assert ok
