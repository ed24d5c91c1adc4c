"""Pointwise ellipticity functionals of complex d x d matrices.

All quantities here are exact eigenvalue reductions of quadratic forms on the
real sphere S^{2d-1} (a complex vector xi = alpha + i*beta is identified with
the real vector (alpha; beta)):

* ``bounds_point``     -- lower ellipticity lambda (smallest eigenvalue of the
  Hermitian part) and upper bound Lambda (largest singular value).
* ``sector_angle_point`` -- the numerical-range angle
  max |arg (A xi | xi)| over unit xi, via a generalized eigenproblem.
* ``delta_p_point``    -- the p-adapted ellipticity constant
  min_{|xi|=1} Re (A xi | J_p xi), the smallest eigenvalue of the realified
  form built by ``realify``.
* ``mu_point``         -- the decoupled ratio inf Re(A xi | xi)/|(A xi | conj xi)|,
  found as the root of the nonincreasing function ``g_of_s``.

Here ``J_p`` is the R-linear map xi -> 2(Re(xi)/p' + i Im(xi)/p) with p' the
Hoelder conjugate; equivalently J_p xi = xi + (1 - 2/p) conj(xi).  Inner
products are linear in the first slot.

Everything is a pure function of small dense matrices; no state is shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

__all__ = [
    "EigenSolverError",
    "NonAccretiveError",
    "PointReport",
    "conjugate_exponent",
    "jp_apply",
    "realify",
    "bilinear_realify",
    "delta_p_point",
    "bounds_point",
    "sector_angle_point",
    "g_of_s",
    "mu_point",
    "lemma_gap",
    "point_report",
]

#: Sentinel for an infinite mu (bilinear form (A xi | conj xi) vanishing
#: identically); the p-elliptic set is then all of (1, inf).
MU_INFINITE = math.inf


class EigenSolverError(RuntimeError):
    """Dense eigenvalue solve failed; carries the offending matrix."""

    def __init__(self, message, matrix):
        super().__init__(message)
        self.matrix = np.asarray(matrix)


class NonAccretiveError(ValueError):
    """Input matrix is not strictly accretive (lambda <= 0)."""


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def _check_exponent(p: float) -> float:
    p = float(p)
    if not (1.0 < p < math.inf):
        raise ValueError(f"exponent p must lie in (1, inf), got {p}")
    return p


def conjugate_exponent(p: float) -> float:
    """Hoelder conjugate p' = p/(p-1), so that 1/p + 1/p' = 1."""
    p = _check_exponent(p)
    return p / (p - 1.0)


def _eigvalsh(M, context):
    try:
        return np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"{context}: {exc}", M) from exc


def jp_apply(p: float, xi) -> np.ndarray:
    """Apply J_p: xi -> 2(Re(xi)/p' + i Im(xi)/p) == xi + (1 - 2/p) conj(xi).

    J_2 is the identity, and (p p'/4) J_p J_{p'} = id.
    """
    p = _check_exponent(p)
    xi = np.asarray(xi, dtype=complex)
    if not np.all(np.isfinite(xi)):
        raise ValueError("vector entries must be finite")
    return 2.0 * (xi.real * (1.0 - 1.0 / p) + 1j * xi.imag / p)


def realify(A, p: float) -> np.ndarray:
    """Real symmetric 2d x 2d matrix of the quadratic form (alpha;beta) -> Re(A xi | J_p xi).

    With A = B + iC the form is the symmetric part of the block matrix
    ``[[(2/p')B, (2/p)C^T - (2/p')C], [0, (2/p)B]]``; its value at
    (alpha; beta) equals Re(A xi | J_p xi) for xi = alpha + i beta, which is
    checked against direct complex evaluation in the test suite.
    """
    A = _as_matrix(A)
    p = _check_exponent(p)
    d = A.shape[0]
    B, C = A.real, A.imag
    a = 2.0 * (1.0 - 1.0 / p)  # 2/p'
    b = 2.0 / p
    M = np.zeros((2 * d, 2 * d))
    M[:d, :d] = a * B
    M[:d, d:] = b * C.T - a * C
    M[d:, d:] = b * B
    return (M + M.T) / 2.0


def bilinear_realify(A) -> tuple[np.ndarray, np.ndarray]:
    """Realifications (R1, R2) of the bilinear form xi -> xi^T A xi.

    R1 and R2 are real symmetric 2d x 2d matrices whose quadratic form values
    at (alpha; beta) are Re(xi^T A xi) and Im(xi^T A xi).  Only the symmetric
    part of A enters (the bilinear form of an antisymmetric matrix vanishes).
    """
    A = _as_matrix(A)
    Bs = (A.real + A.real.T) / 2.0
    Cs = (A.imag + A.imag.T) / 2.0
    R1 = np.block([[Bs, -Cs], [-Cs, -Bs]])
    R2 = np.block([[Cs, Bs], [Bs, -Cs]])
    return R1, R2


def delta_p_point(A, p: float) -> float:
    """p-adapted ellipticity constant min_{|xi|=1} Re (A xi | J_p xi).

    Computed as the smallest eigenvalue of ``realify(A, p)``.  For p = 2 the
    form is the Hermitian-part form, so the value is returned directly as the
    smallest eigenvalue of (A + A*)/2 (bitwise identical to ``bounds_point``).
    May be negative; positivity is exactly the p-ellipticity of A.
    """
    A = _as_matrix(A)
    p = _check_exponent(p)
    if p == 2.0:
        H = (A + A.conj().T) / 2.0
        return float(_eigvalsh(H, "delta_p_point")[0])
    return float(_eigvalsh(realify(A, p), "delta_p_point")[0])


def bounds_point(A) -> tuple[float, float]:
    """(lambda, Lambda): smallest eigenvalue of the Hermitian part and largest singular value."""
    A = _as_matrix(A)
    H = (A + A.conj().T) / 2.0
    lam = float(_eigvalsh(H, "bounds_point")[0])
    try:
        Lam = float(np.linalg.norm(A, 2))
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"bounds_point: {exc}", A) from exc
    return lam, Lam


def sector_angle_point(A) -> float:
    """Numerical-range angle max_{|xi|=1} |arg (A xi | xi)| of a strictly accretive matrix.

    With H = (A+A*)/2 and K = (A-A*)/(2i), the tangent of the angle is the
    largest |mu| among the generalized eigenvalues K v = mu H v.  Requires
    lambda > 0; non-accretive input is rejected.
    """
    import scipy.linalg

    A = _as_matrix(A)
    H = (A + A.conj().T) / 2.0
    K = (A - A.conj().T) / 2j
    lam = float(_eigvalsh(H, "sector_angle_point")[0])
    if lam <= 0.0:
        raise NonAccretiveError(f"sector angle requires lambda > 0, got lambda = {lam}")
    try:
        mus = scipy.linalg.eigh(K, H, eigvals_only=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigenSolverError(f"sector_angle_point: {exc}", A) from exc
    return float(np.arctan(np.max(np.abs(mus))))


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def g_of_s(A, s: float, phase_steps: int = 64) -> float:
    """min_{|xi|=1} [ Re(A xi | xi) - s * |(A xi | conj xi)| ]  for s >= 0.

    Sweeping a unit phase omega (replace xi by omega*xi) turns the modulus into
    min over a rotation angle:  for each theta in [0, pi) the inner minimum of
    Re(A xi | xi) - s * Re(e^{2i theta} xi^T A xi) is the smallest eigenvalue
    of a realified 2d x 2d form, evaluated on a phase grid and then sharpened
    by golden-section refinement (to 1e-10 in theta) around every local grid
    minimum.  Nonincreasing and concave in s; g(|1 - 2/p|) = delta_p_point(A, p).
    """
    A = _as_matrix(A)
    s = float(s)
    if s < 0.0:
        raise ValueError(f"s must be >= 0, got {s}")
    if phase_steps < 8:
        raise ValueError(f"phase_steps must be >= 8, got {phase_steps}")

    M2 = realify(A, 2.0)
    R1, R2 = bilinear_realify(A)

    def eig_min_batch(thetas):
        stack = M2[None, :, :] - s * (
            np.cos(2.0 * thetas)[:, None, None] * R1[None, :, :]
            - np.sin(2.0 * thetas)[:, None, None] * R2[None, :, :]
        )
        return _eigvalsh(stack, "g_of_s")[:, 0]

    thetas = np.linspace(0.0, math.pi, phase_steps, endpoint=False)
    grid = eig_min_batch(thetas)

    h = math.pi / phase_steps
    best = float(np.min(grid))
    # golden-section refinement around every local grid minimum, batched so
    # each iteration is one stacked eigensolve across all brackets
    is_min = (grid <= np.roll(grid, 1)) & (grid <= np.roll(grid, -1))
    centers = thetas[is_min]
    if centers.size:
        a = centers - h
        b = centers + h
        while np.max(b - a) > 1e-10:
            x1 = b - _GOLDEN * (b - a)
            x2 = a + _GOLDEN * (b - a)
            f1 = eig_min_batch(x1)
            f2 = eig_min_batch(x2)
            take_left = f1 <= f2
            b = np.where(take_left, x2, b)
            a = np.where(take_left, a, x1)
        best = min(best, float(np.min(eig_min_batch((a + b) / 2.0))))
    return best


def mu_point(A, tol: float = 1e-9) -> float:
    """Decoupled ellipticity ratio inf Re(A xi | xi) / |(A xi | conj xi)| over unit xi.

    The unique root in s of the nonincreasing concave map ``g_of_s(A, s)``,
    bracketed on [0, Lambda/lambda + 1] and located by bisection to absolute
    tolerance ``tol``.  Returns ``math.inf`` when the bilinear form
    xi^T A xi vanishes identically (antisymmetric bilinear part), in which
    case every p in (1, inf) is admissible.  Requires strict accretivity.
    """
    A = _as_matrix(A)
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    lam, Lam = bounds_point(A)
    if lam <= 0.0:
        raise NonAccretiveError(f"mu requires lambda > 0, got lambda = {lam}")

    sym = (A + A.T) / 2.0  # bilinear-symmetric part; xi^T A xi == xi^T sym xi
    if np.max(np.abs(sym)) <= 1e-14 * max(1.0, np.max(np.abs(A))):
        return MU_INFINITE

    lo, hi = 0.0, Lam / lam + 1.0
    if g_of_s(A, hi) >= 0.0:
        # unreachable for accretive A (mu <= 1 <= hi), kept as a guard
        return MU_INFINITE
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g_of_s(A, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lemma_gap(A, p: float, X, Y) -> float:
    """Slack in the algebraic p-ellipticity inequality for Z = X + iY, p >= 2.

    Returns
        Re(AZ|Z) - (1-2/p)^2 Re(AX|X) - (1-2/p) Im((A-A*)X|Y)
        - delta_p(A) * ( (2/p)|X|^2 + (p/2)|Y|^2 ).

    Nonnegative up to rounding: the first line equals
    (1/2) Re(A Ztilde | J_p Ztilde) for Ztilde = (2/sqrt(p)) X + i sqrt(p) Y,
    and |Ztilde|^2 = 2((2/p)|X|^2 + (p/2)|Y|^2), so the bound is the p-adapted
    lower bound at Ztilde.  Equality holds when Ztilde is the minimizer.
    """
    A = _as_matrix(A)
    p = _check_exponent(p)
    if p < 2.0:
        raise ValueError(f"lemma_gap requires p >= 2, got {p}")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != (A.shape[0],) or Y.shape != (A.shape[0],):
        raise ValueError("X and Y must be real d-vectors")
    Z = X + 1j * Y
    c = 1.0 - 2.0 / p
    skew = A - A.conj().T
    lhs = (
        float(np.real(np.vdot(Z, A @ Z)))
        - c * c * float(np.real(np.vdot(X, A @ X)))
        - c * float(np.imag(np.vdot(Y, skew @ X)))
    )
    return lhs - delta_p_point(A, p) * ((2.0 / p) * float(X @ X) + (p / 2.0) * float(Y @ Y))


@dataclass
class PointReport:
    """Pointwise functionals of one matrix.

    ``mu`` uses ``math.inf`` as the sentinel for a vanishing bilinear form.
    ``delta_p`` maps each requested exponent to its constant (may be negative).
    """

    lambda_pt: float
    Lambda_pt: float
    omega_pt: float
    mu: float
    delta_p: dict[float, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lambda_pt,
            "Lambda": self.Lambda_pt,
            "omega": self.omega_pt,
            "mu": self.mu,
            "delta_p": {repr(p): v for p, v in sorted(self.delta_p.items())},
        }


def point_report(A, ps=(2.0,), tol: float = 1e-9) -> PointReport:
    """Assemble the full pointwise report (lambda, Lambda, omega, mu, delta_p per p)."""
    A = _as_matrix(A)
    lam, Lam = bounds_point(A)
    return PointReport(
        lambda_pt=lam,
        Lambda_pt=Lam,
        omega_pt=sector_angle_point(A),
        mu=mu_point(A, tol),
        delta_p={float(p): delta_p_point(A, p) for p in ps},
    )
