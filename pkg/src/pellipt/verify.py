"""Named invariant suites behind the ``verify`` command.

Each check runs a seeded, deterministic battery at desk scale and returns a
verdict: "pass" (hard invariant holds), "trend" (refinement-quality claim,
non-fatal), or "fail".  Reports are plain dicts with a stable key order and
repr-round-trip floats, so a fixed seed yields byte-identical JSON across
runs.  The full-scale acceptance batteries live in the test suite; these
checks are their fast siblings.
"""

from __future__ import annotations

import math

import numpy as np

from . import __version__, core, oracle, ranges
from . import field as fieldmod
from . import lab, projection

__all__ = ["run_suite", "SUITES"]


def _rng(seed: int, tag: int):
    return np.random.default_rng([seed, tag])


def _accretive(rng, d, min_lambda=0.05):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    lam = np.linalg.eigvalsh((A + A.conj().T) / 2)[0]
    if lam < min_lambda:
        A = A + (min_lambda - lam) * np.eye(d)
    return A


# ---------------------------------------------------------------------------
# core suite


def check_closed_form_anchors(seed):
    A = np.array([[1 + 1j]])
    vals = {
        "delta_4": core.delta_p_point(A, 4.0),
        "mu": core.mu_point(A, 1e-9),
        "omega": core.sector_angle_point(A),
        "offdiag_C": ranges.offdiag_constant(1, 1, 0, 0),
    }
    ok = (
        abs(vals["delta_4"] - (1 - math.sqrt(2) / 2)) <= 1e-9
        and abs(vals["mu"] - 1 / math.sqrt(2)) <= 1e-6
        and abs(vals["omega"] - math.pi / 4) <= 1e-10
        and vals["offdiag_C"] == 2.0
    )
    return ("pass" if ok else "fail"), vals


def check_oracle_delta_equivalence(seed):
    rng = _rng(seed, 1)
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 4))
        A = _accretive(rng, d)
        for p in (2.0, 3.0, 4.0, 8.0):
            gap = abs(core.delta_p_point(A, p)
                      - oracle.sphere_min_delta(A, p, n_samples=20000, seed=seed))
            worst = max(worst, gap)
    return ("pass" if worst <= 1e-6 else "fail"), {"max_gap": worst, "tol": 1e-6}


def check_appendix_bridge(seed):
    rng = _rng(seed, 2)
    worst = 0.0
    for _ in range(40):
        d = int(rng.integers(1, 4))
        A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        p = float(rng.uniform(1.1, 9.0))
        worst = max(worst, abs(core.g_of_s(A, abs(1 - 2 / p)) - core.delta_p_point(A, p)))
    return ("pass" if worst <= 1e-8 else "fail"), {"max_gap": worst, "tol": 1e-8}


def check_appendix_equivalence(seed):
    rng = _rng(seed, 3)
    violations = 0
    for _ in range(30):
        d = int(rng.integers(1, 4))
        A = _accretive(rng, d)
        mu = core.mu_point(A, 1e-9)
        for p in (2.0, 3.0, 4.0, 8.0):
            dp = core.delta_p_point(A, p)
            c = abs(1 - 2 / p)
            if dp > 1e-6 and not mu > c + 1e-6:
                violations += 1
            if mu > c + 1e-6 and not dp > 1e-6:
                violations += 1
    return ("pass" if violations == 0 else "fail"), {"violations": violations}


def check_duality(seed):
    rng = _rng(seed, 4)
    worst_i = 0.0
    worst_ii = 0.0
    for _ in range(40):
        d = int(rng.integers(1, 4))
        A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        p = float(rng.uniform(1.1, 9.0))
        pc = p / (p - 1)
        dp = core.delta_p_point(A, p)
        worst_i = max(worst_i, abs(dp - core.delta_p_point(A, pc)))
        dstar = core.delta_p_point(A.conj().T, p)
        factor = min(p / pc, pc / p) if dp >= 0 else max(p / pc, pc / p)
        worst_ii = max(worst_ii, dp * factor - dstar)
    ok = worst_i <= 1e-10 and worst_ii <= 1e-10
    return ("pass" if ok else "fail"), {"max_pp_gap": worst_i, "max_adjoint_slack": worst_ii}


def check_paper_bounds(seed):
    rng = _rng(seed, 5)
    exact = True
    worst_real = 0.0
    worst_mu = 0.0
    for _ in range(25):
        d = int(rng.integers(1, 4))
        A = _accretive(rng, d)
        lam, Lam = core.bounds_point(A)
        exact = exact and core.delta_p_point(A, 2.0) == lam
        worst_mu = max(worst_mu, lam / Lam - core.mu_point(A, 1e-9))
        R = _accretive(rng, d).real.astype(complex)
        lamR, _ = core.bounds_point(R)
        p = float(rng.uniform(1.1, 9.0))
        pc = p / (p - 1)
        worst_real = max(worst_real, lamR * min(2 / pc, 2 / p) - core.delta_p_point(R, p))
    ok = exact and worst_real <= 1e-10 and worst_mu <= 1e-6
    return ("pass" if ok else "fail"), {
        "delta2_equals_lambda": exact,
        "max_real_bound_slack": worst_real,
        "max_mu_bound_slack": worst_mu,
    }


def check_lemma_gap(seed):
    rng = _rng(seed, 6)
    worst = math.inf
    for _ in range(2000):
        d = int(rng.integers(1, 4))
        A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        p = float(rng.uniform(2.0, 10.0))
        X = rng.standard_normal(d)
        Y = rng.standard_normal(d)
        worst = min(worst, core.lemma_gap(A, p, X, Y) / max(X @ X + Y @ Y, 1e-30))
    return ("pass" if worst >= -1e-10 else "fail"), {"min_scaled_gap": worst}


def check_jp_duality(seed):
    rng = _rng(seed, 7)
    worst = 0.0
    for _ in range(50):
        p = float(rng.uniform(1.05, 12.0))
        pc = p / (p - 1)
        xi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        back = (p * pc / 4.0) * core.jp_apply(p, core.jp_apply(pc, xi))
        worst = max(worst, float(np.max(np.abs(back - xi))))
    return ("pass" if worst <= 1e-12 else "fail"), {"max_error": worst}


def check_range_calculus(seed):
    from fractions import Fraction

    rng = _rng(seed, 8)
    ok = (
        ranges.extrapolation_interval(2, 3).q_lo == Fraction(6, 5)
        and ranges.extrapolation_interval(2, 3).q_hi == Fraction(6)
        and ranges.extrapolation_interval(6, 3).q_lo == Fraction(18, 17)
        and ranges.generic_interval(1, 1, 3).q_hi == math.inf
        and ranges.nash_theta(Fraction(3, 2), 3) == Fraction(1, 3)
    )
    inclusions = 0
    for _ in range(50):
        p = Fraction(int(rng.integers(101, 1200)), 100)
        d = int(rng.integers(3, 9))
        ex = ranges.extrapolation_interval(p, d)
        co = ranges.contraction_interval(p)
        if not (ex.is_symmetric() and co.is_symmetric() and co.is_subset_of(ex)):
            inclusions += 1
    ok = ok and inclusions == 0
    return ("pass" if ok else "fail"), {"inclusion_violations": inclusions}


def check_od_sum(seed):
    direct = sum(math.exp(-max(abs(k) - 1.0, 0.0) ** 2) for k in range(-20, 21))
    got = ranges.od_sum_bound(0.25, 1.0, 2.0, 1, s=1.0, z_mod=1.0, truncation=20)
    vals = [ranges.od_sum_bound(2.0, 0.7, 2.0, 3, s=math.sqrt(z), z_mod=z, truncation=40)
            for z in (0.1, 1.0, 10.0)]
    ok = abs(got - direct) <= 1e-12 and (max(vals) - min(vals)) <= 1e-10 * max(vals)
    return ("pass" if ok else "fail"), {
        "direct_sum_gap": abs(got - direct),
        "z_spread": max(vals) - min(vals),
    }


# ---------------------------------------------------------------------------
# lab suite


def _scalar_op(n, t=1.0, bc=None):
    fld = fieldmod.generate("scalar", (n,), 1.0 / n, t=t, bc=bc)
    return lab.assemble(fld)


def check_l2_contraction_and_sector(seed):
    I2 = np.eye(2, dtype=complex)
    ops = [
        _scalar_op(64, t=0.8),
        lab.assemble(fieldmod.generate("checkerboard", (12, 12), 1 / 12,
                                       matrix=I2, matrix_b=(1 + 1j) * I2)),
    ]
    worst_ratio = 0.0
    sector_ok = True
    for op in ops:
        rep = lab.contractivity_experiment(op, 2.0, trials=40,
                                           times=[0.01, 0.1, 1.0], seed=seed)
        worst_ratio = max(worst_ratio, rep["max_ratio"])
        sec = lab.sector_check(op, trials=100, seed=seed)
        sector_ok = sector_ok and sec["verdicts"]["sector"] == "pass" \
            and sec["verdicts"]["accretivity"] == "pass"
    ok = worst_ratio <= 1.0 + 1e-10 and sector_ok
    return ("pass" if ok else "fail"), {"max_l2_ratio": worst_ratio, "sector_ok": sector_ok}


def _smooth_battery(n_nodes, free, n_funcs=20, modes=6, seed=0):
    rng = np.random.default_rng([seed, 99])
    x = np.linspace(0, 1, n_nodes)
    F = np.zeros((n_nodes, n_funcs), dtype=complex)
    for j in range(n_funcs):
        c = rng.standard_normal(modes) + 1j * rng.standard_normal(modes)
        for k in range(modes):
            F[:, j] += c[k] * np.sin((k + 1) * math.pi * x)
    return F[free]


def check_lp_contractivity_trend(seed):
    overshoots = []
    for n in (16, 32, 64):
        op = _scalar_op(n)
        F = _smooth_battery(op.n_nodes, op.free, seed=seed)
        rep = lab.contractivity_experiment(op, 4.0, trials=F.shape[1],
                                           times=[0.01, 0.1, 1.0], battery=F)
        overshoots.append(rep["overshoot"])
    monotone = all(b <= a + 1e-12 for a, b in zip(overshoots, overshoots[1:]))
    small = overshoots[-1] <= 0.05
    fld = fieldmod.generate("constant", (64,), 1 / 64, matrix=np.array([[1.7 + 0j]]))
    rep = lab.contractivity_experiment(lab.assemble(fld), 4.0, trials=40,
                                       times=[0.01, 0.1, 1.0], seed=seed)
    symmetric_exact = rep["overshoot"] <= 1e-10
    ok = monotone and small and symmetric_exact
    return ("pass" if ok else "fail"), {
        "overshoots": overshoots,
        "monotone": monotone,
        "real_symmetric_overshoot": rep["overshoot"],
    }


def check_offdiagonal(seed):
    worst = 0.0
    for M in (np.eye(1, dtype=complex), np.array([[1 + 1j]])):
        fld = fieldmod.generate("constant", (127,), 1 / 127, matrix=M)
        op = lab.assemble(fld)
        coords = op.mesh.coords[:, 0]
        E = np.flatnonzero(coords <= 0.2)
        for flo in (0.3, 0.5, 0.7):
            F = np.flatnonzero(coords >= flo)
            for t in (0.001, 0.01, 0.1, 1.0):
                measured, bound = lab.offdiagonal_experiment(op, E, F, t, seed=seed)
                worst = max(worst, measured / bound)
    return ("pass" if worst <= 1.1 else "fail"), {"max_measured_over_bound": worst}


def check_dissipativity(seed):
    A = np.array([[1 + 1j]])
    worst_p2 = -math.inf
    cs = []
    for n in (16, 32, 64):
        fld = fieldmod.generate("constant", (n,), 1.0 / n, matrix=A,
                                bc=fieldmod.BoundarySpec.neumann(1))
        op = lab.assemble(fld)
        x = np.linspace(0, 1, op.n_nodes)
        battery = [
            (np.sin(math.pi * x) + 2).astype(complex),
            np.exp(2j * x) * (2 + 0.5 * np.sin(2 * math.pi * x)),
        ]
        c_h = 0.0
        for p in (2.0, 3.0, 4.0):
            dp = core.delta_p_point(A, p)
            for u in battery:
                _, _, gap = lab.dissipativity_check(op, u, p, dp)
                if p == 2.0:
                    worst_p2 = max(worst_p2, -gap)
                else:
                    c_h = max(c_h, -gap)
        cs.append(c_h)
    trend = all(b <= max(0.6 * a, 1e-10) for a, b in zip(cs, cs[1:]))
    ok = worst_p2 <= 1e-10 and trend
    return ("pass" if ok else "fail"), {"p2_neg_gap": worst_p2, "c_h": cs, "trend": trend}


def check_nittka(seed):
    rng = _rng(seed, 10)
    w = np.full(4, 0.25)
    res = projection.nittka_project(np.full(4, 2.0 + 0j), 4.0, w)
    closed_ok = abs(res.t_star - 1.0) <= 1e-8 and abs(lab.lp_norm(res.u, w, 4.0) - 1.0) <= 1e-8
    f = 2.0 * (rng.standard_normal(16) + 1j * rng.standard_normal(16))
    wv = np.full(16, 1 / 16)
    pr = projection.nittka_project(f, 4.0, wv)
    d_star = lab.lp_norm(f - pr.u, wv, 2.0)
    optimal = True
    for _ in range(100):
        cand = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        norm = lab.lp_norm(cand, wv, 4.0)
        if norm > 1.0:
            cand = cand / norm * rng.uniform(0.0, 1.0)
        optimal = optimal and d_star <= lab.lp_norm(f - cand, wv, 2.0) + 1e-9
    again = projection.nittka_project(pr.u, 4.0, wv)
    idempotent = again.t_star == 0.0 and bool(np.array_equal(again.u, pr.u))
    ok = closed_ok and optimal and idempotent and pr.residual <= 1e-8
    return ("pass" if ok else "fail"), {
        "closed_form_ok": closed_ok,
        "optimal": optimal,
        "idempotent": idempotent,
        "residual": pr.residual,
    }


def check_chain_rule(seed):
    res = {}
    for n_pts in (200, 400):
        x = np.linspace(0.05, 3.0, n_pts)
        u = np.exp(1.3j * x) * (2 + np.sin(x))
        res[n_pts] = projection.chain_rule_residual(u, x[1] - x[0], 3.0, 2)
    ratios = [res[200][k] / res[400][k] for k in range(2)]
    ok = all(1.4 <= r <= 2.6 for r in ratios)
    return ("pass" if ok else "fail"), {"halving_ratios": ratios}


def check_ultracontractivity(seed):
    fld = fieldmod.generate("constant", (255,), 1 / 255, matrix=np.eye(1, dtype=complex))
    op = lab.assemble(fld)
    slope = lab.ultracontractivity_experiment(op, 1.5, 0.0, np.geomspace(1e-3, 3e-2, 7))
    err = abs(slope + 1.0 / 12.0)
    return ("pass" if err <= 0.06 else "fail"), {"slope": slope, "target": -1.0 / 12.0, "err": err}


def check_scheme_consistency(seed):
    op = _scalar_op(32, t=0.6)
    x = np.linspace(0, 1, op.n_nodes)
    f = (np.sin(math.pi * x) + 0.5j * np.sin(2 * math.pi * x)).astype(complex)
    t_end = 0.1
    ref = lab.SemigroupRun("exponential", [t_end], qs=(2.0,), store_snapshots=True)
    lab.propagate(op, f, ref)
    u_ref = ref.records[0]["snapshot"]

    def err(scheme, dt):
        run = lab.SemigroupRun(scheme, [t_end], qs=(2.0,), dt=dt, store_snapshots=True)
        lab.propagate(op, f, run)
        return lab.lp_norm(run.records[0]["snapshot"] - u_ref, op.weights, 2.0)

    cn_ratio = err("crank-nicolson", t_end / 64) / err("crank-nicolson", t_end / 128)
    ie_ratio = err("implicit-euler", t_end / 64) / err("implicit-euler", t_end / 128)
    ok = abs(cn_ratio - 4.0) <= 1.0 and abs(ie_ratio - 2.0) <= 0.4
    return ("trend" if ok else "fail"), {"cn_richardson": cn_ratio, "ie_richardson": ie_ratio}


CORE_CHECKS = [
    ("closed_form_anchors", check_closed_form_anchors),
    ("oracle_delta_equivalence", check_oracle_delta_equivalence),
    ("appendix_bridge", check_appendix_bridge),
    ("appendix_equivalence", check_appendix_equivalence),
    ("duality_identities", check_duality),
    ("paper_bounds", check_paper_bounds),
    ("lemma_gap_battery", check_lemma_gap),
    ("jp_duality", check_jp_duality),
    ("range_calculus", check_range_calculus),
    ("od_sum_bound", check_od_sum),
]

LAB_CHECKS = [
    ("l2_contraction_and_sector", check_l2_contraction_and_sector),
    ("lp_contractivity_trend", check_lp_contractivity_trend),
    ("offdiagonal_bounds", check_offdiagonal),
    ("dissipativity", check_dissipativity),
    ("nittka_projection", check_nittka),
    ("chain_rule_identities", check_chain_rule),
    ("ultracontractivity_slope", check_ultracontractivity),
    ("scheme_consistency", check_scheme_consistency),
]

SUITES = {
    "core": CORE_CHECKS,
    "lab": LAB_CHECKS,
    "all": CORE_CHECKS + LAB_CHECKS,
}


def _jsonable(x):
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    if isinstance(x, float):
        return x
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return repr(x)


def run_suite(suite: str, seed: int = 42) -> dict:
    """Run a named suite; deterministic report for a fixed seed."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    checks = []
    counts = {"pass": 0, "trend": 0, "fail": 0}
    for name, fn in SUITES[suite]:
        try:
            verdict, data = fn(seed)
        except Exception as exc:  # a crashed invariant is a failed invariant
            verdict, data = "fail", {"error": f"{type(exc).__name__}: {exc}"}
        counts[verdict] += 1
        checks.append({"name": name, "verdict": verdict, "data": _jsonable(data)})
    return {
        "tool": "pellipt",
        "version": __version__,
        "suite": suite,
        "seed": int(seed),
        "checks": checks,
        "counts": counts,
        "failures": [c["name"] for c in checks if c["verdict"] == "fail"],
    }
