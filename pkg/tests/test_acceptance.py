"""Acceptance gate: every criterion at its stated scale and tolerance.

Each test prints one pass/fail line (visible with ``pytest -s``); stated
runtime budgets are asserted where the criterion names one.  The shared
battery of 200 random strictly accretive matrices (d in {1,2,3}) is drawn
once with seed 42 and reused across the pointwise criteria.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

import pellipt as pe
from pellipt import core, oracle, ranges

SEED = 42
PS = (2.0, 3.0, 4.0, 8.0)


def _report(num, name, ok, detail):
    print(f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    assert ok, f"criterion {num} ({name}): {detail}"


@pytest.fixture(scope="module")
def battery():
    rng = np.random.default_rng(SEED)
    mats = []
    for k in range(200):
        d = (k % 3) + 1
        A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        lam = np.linalg.eigvalsh((A + A.conj().T) / 2)[0]
        if lam < 0.1:
            A = A + (0.1 - lam) * np.eye(d)
        mats.append(A)
    return mats


@pytest.fixture(scope="module")
def battery_values(battery):
    values = []
    for A in battery:
        lam, Lam = core.bounds_point(A)
        values.append({
            "A": A,
            "lambda": lam,
            "Lambda": Lam,
            "mu": core.mu_point(A, 1e-9),
            "delta": {p: core.delta_p_point(A, p) for p in PS},
        })
    return values


def test_criterion_01_oracle_equivalence(battery, battery_values):
    t0 = time.time()
    worst = 0.0
    for vals in battery_values:
        for p in PS:
            search = oracle.sphere_min_delta(vals["A"], p, n_samples=100_000, seed=SEED)
            worst = max(worst, abs(vals["delta"][p] - search))
    elapsed = time.time() - t0
    ok = worst <= 1e-6 and elapsed <= 60.0
    _report(1, "oracle-delta-equivalence", ok,
            f"max |eigen-oracle| = {worst:.2e} <= 1e-6, {elapsed:.1f}s <= 60s")


def test_criterion_02_appendix_equivalence(battery_values):
    violations = 0
    worst_bridge = 0.0
    for vals in battery_values:
        for p in PS:
            dp = vals["delta"][p]
            c = abs(1 - 2 / p)
            if (dp > 1e-6) != (vals["mu"] > c + 1e-6):
                violations += 1
            worst_bridge = max(worst_bridge, abs(core.g_of_s(vals["A"], c) - dp))
    ok = violations == 0 and worst_bridge <= 1e-8
    _report(2, "appendix-equivalence", ok,
            f"{violations} violations, max |g - delta| = {worst_bridge:.2e} <= 1e-8")


def test_criterion_03_duality_identities(battery_values):
    worst_pp = 0.0
    violations = 0
    for vals in battery_values:
        A = vals["A"]
        for p in PS:
            pc = p / (p - 1)
            dp = vals["delta"][p]
            worst_pp = max(worst_pp, abs(dp - core.delta_p_point(A, pc)))
            dstar = core.delta_p_point(A.conj().T, p)
            # the adjoint bound with min{p/p', p'/p} is the p-elliptic lemma;
            # for delta_p < 0 its proof yields the max-constant variant
            factor = min(p / pc, pc / p) if dp >= 0 else max(p / pc, pc / p)
            if dstar < dp * factor - 1e-10:
                violations += 1
    ok = worst_pp <= 1e-10 and violations == 0
    _report(3, "duality-identities", ok,
            f"max |delta_p - delta_p'| = {worst_pp:.2e} <= 1e-10, {violations} adjoint violations")


def test_criterion_04_paper_bounds(battery_values):
    exact = all(v["delta"][2.0] == v["lambda"] for v in battery_values)
    worst_mu = max(v["lambda"] / v["Lambda"] - v["mu"] for v in battery_values)
    rng = np.random.default_rng(SEED + 1)
    worst_real = -math.inf
    for k in range(200):
        d = (k % 3) + 1
        R = rng.standard_normal((d, d))
        lam0 = np.linalg.eigvalsh((R + R.T) / 2)[0]
        if lam0 < 0.1:
            R = R + (0.1 - lam0) * np.eye(d)
        R = R.astype(complex)
        lam, _ = core.bounds_point(R)
        for p in PS:
            pc = p / (p - 1)
            worst_real = max(worst_real,
                             lam * min(2 / pc, 2 / p) - core.delta_p_point(R, p))
    ok = exact and worst_real <= 1e-10 and worst_mu <= 1e-6
    _report(4, "paper-bounds", ok,
            f"delta_2==lambda exact: {exact}, real-bound slack {worst_real:.2e} <= 1e-10, "
            f"mu-bound slack {worst_mu:.2e} <= 1e-6")


def test_criterion_05_closed_form_anchors():
    A = np.array([[1 + 1j]])
    d4 = core.delta_p_point(A, 4.0)
    mu = core.mu_point(A, 1e-9)
    om = core.sector_angle_point(A)
    C = ranges.offdiag_constant(1, 1, 0, 0)
    ok = (abs(d4 - (1 - math.sqrt(2) / 2)) <= 1e-9
          and abs(mu - 1 / math.sqrt(2)) <= 1e-6
          and abs(om - math.pi / 4) <= 1e-10
          and C == 2.0)
    _report(5, "closed-form-anchors", ok,
            f"delta_4={d4:.9f}, mu={mu:.7f}, omega={om:.10f}, C={C}")


def test_criterion_06_range_calculus():
    from fractions import Fraction

    t0 = time.time()
    iv = ranges.extrapolation_interval(2, 3)
    ok = (iv.q_lo, iv.q_hi) == (Fraction(6, 5), Fraction(6))
    iv = ranges.extrapolation_interval(6, 3)
    ok = ok and (iv.q_lo, iv.q_hi) == (Fraction(18, 17), Fraction(18))
    iv = ranges.generic_interval(1, 1, 3)
    ok = ok and iv.q_lo == 1 and iv.q_hi == math.inf and not iv.lo_closed
    rng = np.random.default_rng(SEED)
    inclusion = 0
    for _ in range(50):
        p = Fraction(int(rng.integers(101, 1500)), 100)
        d = int(rng.integers(3, 10))
        if not ranges.contraction_interval(p).is_subset_of(
                ranges.extrapolation_interval(p, d)):
            inclusion += 1
    ok = ok and inclusion == 0
    _report(6, "range-calculus", ok,
            f"exact rational anchors, {inclusion} inclusion violations, {time.time()-t0:.2f}s")


def test_criterion_07_lemma_inequality():
    t0 = time.time()
    rng = np.random.default_rng(SEED)
    worst = math.inf
    for _ in range(10_000):
        d = int(rng.integers(1, 4))
        A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        p = float(rng.uniform(2.0, 10.0))
        X = rng.standard_normal(d)
        Y = rng.standard_normal(d)
        scale = X @ X + Y @ Y
        if scale == 0:
            continue
        worst = min(worst, core.lemma_gap(A, p, X, Y) / scale)
    elapsed = time.time() - t0
    ok = worst >= -1e-10 and elapsed <= 30.0
    _report(7, "lemma-inequality", ok,
            f"min scaled gap = {worst:.2e} >= -1e-10, {elapsed:.1f}s <= 30s")


def test_criterion_08_lab_contraction_and_sector():
    t0 = time.time()
    I2 = np.eye(2, dtype=complex)
    ops = [
        pe.assemble(pe.generate("checkerboard", (64, 64), 1 / 64,
                                matrix=I2, matrix_b=(1 + 1j) * I2)),
        pe.assemble(pe.generate("scalar", (1023,), 1 / 1023, t=1.0)),
    ]
    worst_ratio = 0.0
    worst_arg_excess = -math.inf
    for op in ops:
        assert op.free.size <= 64 * 64
        rep = pe.contractivity_experiment(op, 2.0, trials=100,
                                          times=[0.01, 0.1, 1.0], seed=SEED)
        worst_ratio = max(worst_ratio, rep["max_ratio"])
        sec = pe.sector_check(op, trials=200, seed=SEED)
        worst_arg_excess = max(worst_arg_excess, sec["max_arg"] - sec["field_omega"])
    elapsed = time.time() - t0
    ok = worst_ratio <= 1.0 + 1e-10 and worst_arg_excess <= 1e-8 and elapsed <= 120.0
    _report(8, "lab-contraction-and-sector", ok,
            f"max L2 ratio = 1{worst_ratio - 1:+.1e} <= 1+1e-10, "
            f"arg excess = {worst_arg_excess:.1e} <= 1e-8, {elapsed:.1f}s <= 120s")


def _smooth_battery(n_nodes, free, n_funcs=30, modes=6):
    rng = np.random.default_rng(SEED + 2)
    x = np.linspace(0, 1, n_nodes)
    F = np.zeros((n_nodes, n_funcs), dtype=complex)
    for j in range(n_funcs):
        c = rng.standard_normal(modes) + 1j * rng.standard_normal(modes)
        for k in range(modes):
            F[:, j] += c[k] * np.sin((k + 1) * math.pi * x)
    return F[free]


def test_criterion_09_lp_contractivity_trend():
    t0 = time.time()
    times = [0.01, 0.1, 1.0]
    overshoots = []
    for n in (16, 32, 64):
        op = pe.assemble(pe.generate("scalar", (n,), 1.0 / n, t=1.0))
        eps_h = -math.inf
        for bat in (_smooth_battery(op.n_nodes, op.free), None):
            rep = pe.contractivity_experiment(op, 4.0, trials=50, times=times,
                                              seed=SEED, battery=bat)
            eps_h = max(eps_h, rep["overshoot"])
        overshoots.append(eps_h)
    monotone = all(b <= a + 1e-12 for a, b in zip(overshoots, overshoots[1:]))
    small = overshoots[-1] <= 0.05

    sym_worst = -math.inf
    for n in (16, 32, 64):
        op = pe.assemble(pe.generate("constant", (n,), 1.0 / n,
                                     matrix=np.array([[1.7 + 0j]])))
        rep = pe.contractivity_experiment(op, 4.0, trials=50, times=times, seed=SEED)
        sym_worst = max(sym_worst, rep["overshoot"])
    elapsed = time.time() - t0
    ok = monotone and small and sym_worst <= 1e-10 and elapsed <= 300.0
    _report(9, "lp-contractivity-trend", ok,
            f"eps(h) = {['%.3e' % o for o in overshoots]} nonincreasing={monotone}, "
            f"finest <= 0.05: {small}, real-sym overshoot = {sym_worst:.1e} <= 1e-10, "
            f"{elapsed:.1f}s <= 300s")


def test_criterion_10_offdiagonal_bounds():
    t0 = time.time()
    worst = 0.0
    h = 1.0 / 127
    for M in (np.eye(1, dtype=complex), np.array([[1 + 1j]])):
        op = pe.assemble(pe.generate("constant", (127,), h, matrix=M))
        assert op.n_nodes == 128
        coords = op.mesh.coords[:, 0]
        E = np.flatnonzero(coords <= 0.2)
        for flo in (0.3, 0.5, 0.7):
            F = np.flatnonzero(coords >= flo)
            assert flo - 0.2 >= 8 * h
            for t in (0.001, 0.01, 0.1, 1.0):
                measured, bound = pe.offdiagonal_experiment(op, E, F, t, seed=SEED)
                worst = max(worst, measured / bound)
    elapsed = time.time() - t0
    ok = worst <= 1.1 and elapsed <= 60.0
    _report(10, "offdiagonal-bounds", ok,
            f"max measured/bound = {worst:.4f} <= 1.1, {elapsed:.1f}s <= 60s")


def test_criterion_11_dissipativity():
    A = np.array([[1 + 1j]])
    worst_p2 = -math.inf
    cs = []
    for n in (16, 32, 64):
        op = pe.assemble(pe.generate("constant", (n,), 1.0 / n, matrix=A,
                                     bc=pe.BoundarySpec.neumann(1)))
        x = np.linspace(0, 1, op.n_nodes)
        interpolants = [
            (np.sin(math.pi * x) + 2).astype(complex),
            np.exp(2j * x) * (2 + 0.5 * np.sin(2 * math.pi * x)),
            (np.sin(math.pi * x) + 2) * np.exp(1j * np.cos(2 * x)),
        ]
        c_h = 0.0
        for p in (2.0, 3.0, 4.0):
            dp = core.delta_p_point(A, p)
            for u in interpolants:
                _, _, gap = pe.dissipativity_check(op, u, p, dp)
                if p == 2.0:
                    worst_p2 = max(worst_p2, -gap)
                else:
                    c_h = max(c_h, -gap)
        cs.append(c_h)
    # 1e-10 floor: rounding-level c(h) counts as converged
    trend = all(b <= max(0.6 * a, 1e-10) for a, b in zip(cs, cs[1:]))
    ok = worst_p2 <= 1e-10 and trend
    _report(11, "dissipativity", ok,
            f"p=2 neg gap = {worst_p2:.1e} <= 1e-10, c(h) = {['%.1e' % c for c in cs]}, "
            f"c(h/2) <= 0.6 c(h) (floor 1e-10): {trend}")


def test_criterion_12_nittka_projection():
    w = np.full(4, 0.25)
    res = pe.nittka_project(np.full(4, 2.0 + 0j), 4.0, w)
    closed = (abs(res.t_star - 1.0) <= 1e-8
              and abs(pe.lp_norm(res.u, w, 4.0) - 1.0) <= 1e-8)
    rng = np.random.default_rng(SEED)
    f = 2.0 * (rng.standard_normal(32) + 1j * rng.standard_normal(32))
    wv = np.full(32, 1 / 32)
    pr = pe.nittka_project(f, 4.0, wv)
    d_star = pe.lp_norm(f - pr.u, wv, 2.0)
    optimal = True
    for _ in range(100):
        cand = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        norm = pe.lp_norm(cand, wv, 4.0)
        if norm > 1.0:
            cand = cand / norm * rng.uniform(0.0, 1.0)
        optimal = optimal and d_star <= pe.lp_norm(f - cand, wv, 2.0) + 1e-9
    again = pe.nittka_project(pr.u, 4.0, wv)
    idempotent = again.t_star == 0.0 and bool(np.array_equal(again.u, pr.u))
    ok = closed and optimal and idempotent
    _report(12, "nittka-projection", ok,
            f"closed-form t*={res.t_star:.9f}, optimal vs 100 competitors: {optimal}, "
            f"idempotent: {idempotent}")


def test_criterion_13_ultracontractivity_slope():
    t0 = time.time()
    op = pe.assemble(pe.generate("constant", (511,), 1 / 511,
                                 matrix=np.eye(1, dtype=complex)))
    times = np.geomspace(3e-4, 3e-2, 9)   # two decades inside the resolvable band
    slope = pe.ultracontractivity_experiment(op, 1.5, 0.0, times)
    err = abs(slope - (-1.0 / 12.0))
    elapsed = time.time() - t0
    ok = err <= 0.05 and elapsed <= 60.0
    _report(13, "ultracontractivity-slope", ok,
            f"slope = {slope:.4f} vs -1/12 = {-1/12:.4f}, |err| = {err:.4f} <= 0.05, "
            f"{elapsed:.1f}s <= 60s")


def test_criterion_14_determinism(tmp_path):
    outs = []
    for k in (1, 2):
        out = tmp_path / f"verify{k}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "pellipt.cli", "verify", "--suite", "all",
             "--seed", "42", "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    identical = outs[0] == outs[1]
    report = json.loads(outs[0])
    ok = identical and not report["failures"]
    _report(14, "determinism", ok,
            f"byte-identical: {identical}, suite failures: {report['failures']}")
