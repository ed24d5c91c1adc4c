"""Metric projection onto the weighted L^p unit ball, truncations, chain-rule checks.

The projection of f onto {u : ||u||_p <= 1} in the weighted L^2 metric is
characterized nodewise by the implicit equation f = u + t u |u|^{p-2} for a
scalar t > 0.  Writing Upsilon_t(s) = s + t s^{p-1} (strictly increasing on
s >= 0) and Psi_t for its inverse, the projection is u = Phi_t(f) with
Phi_t(z) = sgn(z) Psi_t(|z|); the outer parameter t is pinned by ||u||_p = 1.

``truncation_pair`` builds the capped powers v = u (|u|^{p/2-1} ^ n) and
w = u (|u|^{p-2} ^ n^2) with the indicator pair of the cap region, and
``chain_rule_residual`` verifies the two gradient identities linking
grad u and grad w to Z = conj(sgn v) grad v on sampled smooth data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .lab import lp_norm

__all__ = ["ProjectionResult", "nittka_project", "truncation_pair", "chain_rule_residual"]


@dataclass
class ProjectionResult:
    """Projection u, the implicit scalar t_star, and the nodewise equation residual."""

    u: np.ndarray
    t_star: float
    residual: float


def _sgn(z: np.ndarray) -> np.ndarray:
    """z/|z| with sgn(0) = 0."""
    r = np.abs(z)
    return np.where(r > 0, z / np.where(r > 0, r, 1.0), 0.0)


def _invert_upsilon(t: float, r: np.ndarray, p: float) -> np.ndarray:
    """Solve s + t s^{p-1} = r elementwise for s >= 0 (Newton, bisection safeguard, tol 1e-12).

    Upsilon is increasing and convex for p >= 2, so Newton started at s = r
    descends monotonically onto the root; iterates are clipped into the
    bracket [0, r] as a safeguard.
    """
    if t == 0.0:
        return r.copy()
    s = r.copy()
    lo = np.zeros_like(r)
    hi = r.copy()
    for _ in range(200):
        sp = s ** (p - 2.0) if p != 2.0 else np.ones_like(s)
        res = s + t * s * sp - r
        if np.all(np.abs(res) <= 1e-12 * np.maximum(1.0, r)):
            break
        lo = np.where(res < 0, s, lo)
        hi = np.where(res > 0, s, hi)
        step = res / (1.0 + t * (p - 1.0) * sp)
        s = s - step
        bad = (s <= lo) | (s >= hi) | ~np.isfinite(s)
        s = np.where(bad, 0.5 * (lo + hi), s)
    return s


def nittka_project(f, p: float, weights) -> ProjectionResult:
    """Project f onto the weighted L^p unit ball in the weighted L^2 metric.

    Returns f unchanged with t_star = 0 when ||f||_p <= 1 up to the outer
    tolerance 1e-10, which makes re-projection of a result exact idempotence.
    Otherwise bisects on t (the map t -> ||Phi_t(f)||_p is strictly
    decreasing) until the norm matches 1 within 1e-10; non-convergence after
    200 outer iterations raises with the bracket attached.
    """
    p = float(p)
    if p < 2.0:
        raise ValueError(f"projection requires p >= 2, got {p}")
    f = np.asarray(f, dtype=complex)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), f.shape)
    norm_f = lp_norm(f, weights, p)
    if norm_f <= 1.0 + 1e-10:
        return ProjectionResult(u=f.copy(), t_star=0.0, residual=0.0)

    r = np.abs(f)
    phase = _sgn(f)

    def norm_at(t):
        return lp_norm(_invert_upsilon(t, r, p), weights, p)

    lo, hi = 0.0, 1.0
    grow = 0
    while norm_at(hi) > 1.0:
        lo, hi = hi, hi * 2.0
        grow += 1
        if grow > 200:
            raise RuntimeError(f"projection bracket search failed: t in [{lo}, {hi}]")

    t = hi
    for _ in range(200):
        t = 0.5 * (lo + hi)
        val = norm_at(t)
        if abs(val - 1.0) <= 1e-10:
            break
        if val > 1.0:
            lo = t
        else:
            hi = t
    else:
        raise RuntimeError(
            f"projection did not converge in 200 bisections; bracket [{lo}, {hi}]"
        )

    s = _invert_upsilon(t, r, p)
    u = phase * s
    up = u * np.where(s > 0, s ** (p - 2.0), 0.0) if p != 2.0 else u
    res_num = lp_norm(f - u - t * up, weights, 2.0)
    res_den = lp_norm(f, weights, 2.0)
    return ProjectionResult(u=u, t_star=float(t),
                            residual=float(res_num / res_den if res_den else res_num))


def truncation_pair(u, p: float, n: int):
    """(v, w, chi, chi_c): capped powers and the cap indicator pair.

    v = u (|u|^{p/2-1} ^ n),  w = u (|u|^{p-2} ^ n^2),
    chi = 1[|u|^{p-2} >= n^2], chi_c = 1 - chi.

    Below the cap |v| = |u|^{p/2}; above it v = n u.  Powers use the
    zero-at-zero convention (0 * anything = 0); at p = 2 both caps reduce to
    min(1, n) = 1.
    """
    p = float(p)
    if p < 2.0:
        raise ValueError(f"truncation requires p >= 2, got {p}")
    n = int(n)
    if n < 1:
        raise ValueError(f"truncation level must be >= 1, got {n}")
    u = np.asarray(u, dtype=complex)
    r = np.abs(u)
    if p == 2.0:
        pow_half = np.ones_like(r)
        pow_full = np.ones_like(r)
    else:
        pow_half = np.where(r > 0, r ** (p / 2.0 - 1.0), 0.0)
        pow_full = np.where(r > 0, r ** (p - 2.0), 0.0)
    v = u * np.minimum(pow_half, float(n))
    w = u * np.minimum(pow_full, float(n) ** 2)
    chi = (pow_full >= float(n) ** 2).astype(float)
    return v, w, chi, 1.0 - chi


def _forward_diff(arr: np.ndarray, spacing) -> list:
    """One-sided (forward) differences per axis; arrays shrink by one index per axis.

    First-order accurate by design, so identity residuals computed from them
    scale like O(h) on smooth data.
    """
    spacing = np.atleast_1d(np.asarray(spacing, dtype=float))
    grads = []
    for axis in range(arr.ndim):
        sl_hi = [slice(None)] * arr.ndim
        sl_lo = [slice(None)] * arr.ndim
        sl_hi[axis] = slice(1, None)
        sl_lo[axis] = slice(None, -1)
        g = (arr[tuple(sl_hi)] - arr[tuple(sl_lo)]) / spacing[axis if spacing.size > 1 else 0]
        grads.append(g)
    return grads


def _common_region(shape, ndim):
    return tuple(slice(None, s - 1) for s in shape)


def chain_rule_residual(u, spacing, p: float, n: int):
    """(res_u, res_w): max residuals of the two truncation gradient identities.

    With Z = conj(sgn v) grad v and X = Re Z the identities are

        conj(sgn v) grad u = (1/n) chi Z + chi_c |v|^{2/p-1} (Z - (1-2/p) X),
        conj(sgn v) grad w = n chi Z + chi_c |v|^{1-2/p} (Z + (1-2/p) X).

    Gradients are forward finite differences of the nodal samples ``u`` on a
    uniform 1D/2D grid with the given spacing; the residual is the maximum
    over nodes where the cap indicator is locally constant (interface band of
    width 2 grid steps excluded) and |u| is bounded away from zero.  Nodes
    where u vanishes beyond the band are excluded with a warning.
    """
    p = float(p)
    u = np.asarray(u, dtype=complex)
    if u.ndim not in (1, 2):
        raise ValueError("chain_rule_residual supports 1D and 2D sample grids")
    v, w, chi, chi_c = truncation_pair(u, p, n)

    region = _common_region(u.shape, u.ndim)
    du = [g[region] for g in _forward_diff(u, spacing)]
    dv = [g[region] for g in _forward_diff(v, spacing)]
    dw = [g[region] for g in _forward_diff(w, spacing)]

    uc = u[region]
    vc = v[region]
    chic = chi[region]
    chicc = chi_c[region]

    # exclusion: interface band (chi not constant within 2 steps) and near-zeros
    interface = np.zeros(chic.shape, dtype=bool)
    for axis in range(u.ndim):
        for shift in (1, 2):
            sl_a = [slice(None)] * u.ndim
            sl_b = [slice(None)] * u.ndim
            sl_a[axis] = slice(None, -shift)
            sl_b[axis] = slice(shift, None)
            diff = chic[tuple(sl_a)] != chic[tuple(sl_b)]
            interface[tuple(sl_a)] |= diff
            interface[tuple(sl_b)] |= diff
    scale = float(np.max(np.abs(uc))) if uc.size else 1.0
    nonzero = np.abs(uc) > 1e-8 * scale
    if np.mean(~nonzero) > 0.05:
        warnings.warn("u vanishes on a sizable region; residuals restricted to the support",
                      RuntimeWarning)
    valid = nonzero & ~interface & (np.abs(vc) > 0)
    if not np.any(valid):
        raise ValueError("no valid nodes left after excluding interface band and zero set")

    sgn_v_bar = np.conj(_sgn(vc))
    rv = np.abs(vc)
    amp_u = np.where(rv > 0, rv ** (2.0 / p - 1.0), 0.0)
    amp_w = np.where(rv > 0, rv ** (1.0 - 2.0 / p), 0.0)
    c = 1.0 - 2.0 / p

    res_u = 0.0
    res_w = 0.0
    for g_u, g_v, g_w in zip(du, dv, dw):
        Z = sgn_v_bar * g_v
        X = Z.real
        lhs_u = sgn_v_bar * g_u
        rhs_u = (1.0 / n) * chic * Z + chicc * amp_u * (Z - c * X)
        lhs_w = sgn_v_bar * g_w
        rhs_w = n * chic * Z + chicc * amp_w * (Z + c * X)
        res_u = max(res_u, float(np.max(np.abs((lhs_u - rhs_u)[valid]))))
        res_w = max(res_w, float(np.max(np.abs((lhs_w - rhs_w)[valid]))))
    return res_u, res_w
