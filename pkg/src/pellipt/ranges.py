"""Exponent-interval calculus and explicit constants, in exact rational arithmetic.

Intervals of Lebesgue exponents are recorded in 1/q coordinates (``QInterval``)
because every result here is symmetric about 1/2 under q <-> q' duality:
lo_inv + hi_inv = 1 exactly.  Endpoints are :class:`fractions.Fraction` when
the inputs are rational (int/Fraction, or float -- floats are dyadic rationals
and convert exactly); only mu-derived endpoints fall back to floats.

* ``contraction_interval``:  |1/2 - 1/q| <= |1/2 - 1/p|  (contraction range).
* ``extrapolation_interval``: |1/2 - 1/q| <= 1/d + (1 - 2/d)|1/2 - 1/p|, d >= 3.
* ``generic_interval``:      |1/2 - 1/q| <  1/d + (1/2 - 1/d) lambda/Lambda.
* ``p_elliptic_interval``:   the open set {p : |1 - 2/p| < mu}.

Endpoints that the formulas push outside (0, 1) are clipped and recorded as
open (q = 1 and q = infinity are outside the scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

__all__ = [
    "QInterval",
    "p_elliptic_interval",
    "extrapolation_interval",
    "contraction_interval",
    "generic_interval",
    "offdiag_constant",
    "rotated_lower_bound",
    "pq_exponent",
    "nash_theta",
    "sobolev_conjugate",
    "od_sum_bound",
]

HALF = Fraction(1, 2)


def _frac(x):
    """Exact rational representation: Fraction/int pass through, floats convert exactly."""
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"expected a finite number, got {x}")
        return Fraction(x)
    raise TypeError(f"expected a rational or float, got {type(x).__name__}")


@dataclass(frozen=True)
class QInterval:
    """An interval of exponents, stored as endpoints in 1/q coordinates.

    ``lo_inv < hi_inv`` except for a degenerate single point (both closed,
    ``degenerate`` set).  ``clipped_lo``/``clipped_hi`` record endpoints that
    were pulled back to the boundary of (0, 1) and therefore opened.
    ``shifted`` marks intervals that refer to the exponentially shifted
    semigroup (generator L + eps) rather than L itself.  ``variable`` is the
    exponent letter the interval quantifies ("q" or "p").
    """

    lo_inv: Fraction | float
    hi_inv: Fraction | float
    lo_closed: bool
    hi_closed: bool
    clipped_lo: bool = False
    clipped_hi: bool = False
    degenerate: bool = False
    shifted: bool = False
    variable: str = "q"

    def __post_init__(self):
        if self.degenerate:
            if self.lo_inv != self.hi_inv or not (self.lo_closed and self.hi_closed):
                raise ValueError("degenerate interval must be a single closed point")
        elif not self.lo_inv < self.hi_inv:
            raise ValueError(f"need lo_inv < hi_inv, got [{self.lo_inv}, {self.hi_inv}]")

    # -- exponent-scale endpoints ------------------------------------------

    @property
    def q_lo(self):
        """Lower exponent endpoint (1/hi_inv); 1 corresponds to hi_inv = 1."""
        return _invert(self.hi_inv)

    @property
    def q_hi(self):
        """Upper exponent endpoint (1/lo_inv); math.inf when lo_inv = 0."""
        return _invert(self.lo_inv)

    @property
    def exact(self) -> bool:
        return isinstance(self.lo_inv, Rational) and isinstance(self.hi_inv, Rational)

    def is_symmetric(self) -> bool:
        """q <-> q' duality: lo_inv + hi_inv == 1 (exact when rational)."""
        s = self.lo_inv + self.hi_inv
        return s == 1 if self.exact else abs(s - 1.0) < 1e-12

    def contains_inv(self, x) -> bool:
        lo_ok = x > self.lo_inv or (self.lo_closed and x == self.lo_inv)
        hi_ok = x < self.hi_inv or (self.hi_closed and x == self.hi_inv)
        return lo_ok and hi_ok

    def contains(self, q) -> bool:
        """Membership of the exponent q in the interval."""
        if q == math.inf or not q > 1:
            return False
        inv = 1 / Fraction(q) if isinstance(q, Rational) else 1.0 / float(q)
        return self.contains_inv(inv)

    def is_subset_of(self, other: "QInterval") -> bool:
        lo_ok = self.lo_inv > other.lo_inv or (
            self.lo_inv == other.lo_inv and (other.lo_closed or not self.lo_closed)
        )
        hi_ok = self.hi_inv < other.hi_inv or (
            self.hi_inv == other.hi_inv and (other.hi_closed or not self.hi_closed)
        )
        return lo_ok and hi_ok

    def __str__(self) -> str:
        # clipped endpoints are stored open already, so brackets follow the flags
        lo = _fmt_exp(self.q_lo)
        hi = _fmt_exp(self.q_hi)
        if self.degenerate:
            return f"{self.variable} = {lo}"
        lb = "[" if self.hi_closed else "("
        rb = "]" if self.lo_closed else ")"
        return f"{self.variable} in {lb}{lo}, {hi}{rb}"

    def to_dict(self) -> dict:
        return {
            "variable": self.variable,
            "lo": _exp_json(self.q_lo),
            "hi": _exp_json(self.q_hi),
            "lo_closed": self.hi_closed,
            "hi_closed": self.lo_closed,
            "lo_inv": _exp_json(self.lo_inv),
            "hi_inv": _exp_json(self.hi_inv),
            "clipped": [self.clipped_lo, self.clipped_hi],
            "degenerate": self.degenerate,
            "shifted": self.shifted,
            "display": str(self),
        }


def _invert(x):
    if x == 0:
        return math.inf
    if isinstance(x, Rational):
        return Fraction(1) / Fraction(x)
    return 1.0 / x


def _fmt_exp(q) -> str:
    if q == math.inf:
        return "inf"
    if isinstance(q, Rational):
        q = Fraction(q)
        return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
    return repr(float(q))


def _exp_json(q):
    if isinstance(q, Rational):
        return _fmt_exp(q)
    return float(q)


def _symmetric_interval(halfwidth, closed: bool, variable: str = "q",
                        shifted: bool = False) -> QInterval:
    """Interval |1/2 - 1/q| (<=,<) halfwidth, clipped to stay inside (0, 1)."""
    zero = Fraction(0) if isinstance(halfwidth, Rational) else 0.0
    one = Fraction(1) if isinstance(halfwidth, Rational) else 1.0
    if halfwidth == 0:
        if not closed:
            raise ValueError("empty interval: zero half-width with open endpoints")
        return QInterval(HALF, HALF, True, True, degenerate=True,
                         variable=variable, shifted=shifted)
    lo = HALF - halfwidth
    hi = HALF + halfwidth
    clip_lo = lo <= 0
    clip_hi = hi >= 1
    return QInterval(
        lo_inv=zero if clip_lo else lo,
        hi_inv=one if clip_hi else hi,
        lo_closed=closed and not clip_lo,
        hi_closed=closed and not clip_hi,
        clipped_lo=clip_lo,
        clipped_hi=clip_hi,
        variable=variable,
        shifted=shifted,
    )


def p_elliptic_interval(mu) -> QInterval:
    """The open set of exponents {p : |1 - 2/p| < mu}, i.e. 1/p in ((1-mu)/2, (1+mu)/2).

    mu = 0 degenerates to the single point {2} (flagged).  ``math.inf`` (the
    vanishing-bilinear-form sentinel) gives all of (1, inf).  mu-derived
    endpoints stay floats; rational mu stays exact.
    """
    if mu == math.inf:
        return QInterval(0.0, 1.0, False, False, clipped_lo=True, clipped_hi=True,
                         variable="p")
    if isinstance(mu, Rational):
        half = Fraction(mu) / 2
    else:
        half = float(mu) / 2.0
    if half < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    if half == 0:
        return QInterval(HALF, HALF, True, True, degenerate=True, variable="p")
    return _symmetric_interval(half, closed=False, variable="p")


def extrapolation_interval(p, d: int, homogeneous: bool = True) -> QInterval:
    """Closed extrapolation range |1/2 - 1/q| <= 1/d + (1 - 2/d)|1/2 - 1/p|, d >= 3.

    ``homogeneous=False`` marks the result as holding for the shifted
    semigroup (generator L + eps) only, without changing the endpoints.
    Half-width saturates at 1/2 (clipped endpoints open).
    """
    d = int(d)
    if d < 3:
        raise ValueError(f"extrapolation range requires d >= 3, got d = {d}")
    p = _frac(p)
    if not 1 < p:
        raise ValueError(f"p must lie in (1, inf), got {p}")
    hw = Fraction(1, d) + (1 - Fraction(2, d)) * abs(HALF - 1 / p)
    hw = min(hw, HALF)
    return _symmetric_interval(hw, closed=True, shifted=not homogeneous)


def contraction_interval(p) -> QInterval:
    """Closed contraction range |1/2 - 1/q| <= |1/2 - 1/p|; {2} at p = 2."""
    p = _frac(p)
    if not 1 < p:
        raise ValueError(f"p must lie in (1, inf), got {p}")
    return _symmetric_interval(abs(HALF - 1 / p), closed=True)


def generic_interval(lam, Lam, d: int) -> QInterval:
    """Open range |1/2 - 1/q| < 1/d + (1/2 - 1/d) * lambda/Lambda for any strictly elliptic field."""
    d = int(d)
    if d < 3:
        raise ValueError(f"generic range requires d >= 3, got d = {d}")
    lam_f, Lam_f = _frac(lam), _frac(Lam)
    if not 0 < lam_f <= Lam_f:
        raise ValueError(f"need 0 < lambda <= Lambda, got lambda={lam}, Lambda={Lam}")
    hw = Fraction(1, d) + (HALF - Fraction(1, d)) * lam_f / Lam_f
    hw = min(hw, HALF)
    return _symmetric_interval(hw, closed=False)


def offdiag_constant(lam: float, Lam: float, omega: float, psi: float) -> float:
    """Gaussian off-diagonal constant C = Lambda + Lambda^2 cos(omega) / (lambda cos(psi + omega)).

    Governs the decay exp(-dist(E,F)^2 / (4 C |z|)) on the sector of half-angle
    psi; requires psi + omega < pi/2.  Strictly increasing in psi.
    """
    lam, Lam, omega, psi = map(float, (lam, Lam, omega, psi))
    if not 0 < lam <= Lam:
        raise ValueError(f"need 0 < lambda <= Lambda, got lambda={lam}, Lambda={Lam}")
    if not (0 <= omega < math.pi / 2 and 0 <= psi):
        raise ValueError("need omega in [0, pi/2) and psi >= 0")
    if psi + omega >= math.pi / 2:
        raise ValueError(f"need psi + omega < pi/2, got {psi + omega}")
    return Lam + (Lam * Lam * math.cos(omega)) / (lam * math.cos(psi + omega))


def rotated_lower_bound(lam: float, omega: float, psi: float) -> float:
    """Lower ellipticity of the rotated form: lambda * cos(psi + omega) / cos(omega).

    Positive for psi + omega < pi/2; equals lambda at psi = 0 and decreases in psi.
    """
    lam, omega, psi = map(float, (lam, omega, psi))
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not (0 <= omega < math.pi / 2 and 0 <= psi):
        raise ValueError("need omega in [0, pi/2) and psi >= 0")
    if psi + omega >= math.pi / 2:
        raise ValueError(f"need psi + omega < pi/2, got {psi + omega}")
    return lam * math.cos(psi + omega) / math.cos(omega)


def sobolev_conjugate(d: int) -> Fraction:
    """2* = 2d/(d-2) for d >= 3."""
    d = int(d)
    if d < 3:
        raise ValueError(f"Sobolev conjugate requires d >= 3, got d = {d}")
    return Fraction(2 * d, d - 2)


def pq_exponent(p, q, d: int):
    """Time-decay exponent d/(2q) - d/(2p) (<= 0) of p -> q boundedness."""
    p, q = _frac(p), _frac(q)
    if p > q:
        raise ValueError(f"need p <= q, got p={p} > q={q}")
    return Fraction(d, 2) / q - Fraction(d, 2) / p


def nash_theta(p, d: int):
    """Interpolation parameter theta solving 1/2 = (1-theta)/p + theta/2*, 2* = 2d/(d-2).

    theta = 0 at p = 2 (degenerate: the interpolation inequality trivializes).
    """
    p = _frac(p)
    if not 1 < p:
        raise ValueError(f"p must lie in (1, inf), got {p}")
    star = sobolev_conjugate(d)
    theta = (HALF - 1 / p) / (1 / star - 1 / p)
    if not 0 <= theta < 1:
        raise ValueError(f"interpolation parameter {theta} outside [0, 1) for p={p}, d={d}")
    return theta


def od_sum_bound(C: float, theta: float, q, d: int, s: float, z_mod: float,
                 truncation: int = 30) -> float:
    """Lattice sum turning off-diagonal decay into a q -> q operator-norm bound.

    Returns ``s^{d/2 - d/q} * sum_{k in Z^d, |k|_inf <= truncation}
    g(s * max(|k|/sqrt(d) - 1, 0))`` with the Gaussian profile
    ``g(r) = z_mod^{d/4 - d/(2q)} * exp(-theta r^2 / (4 C z_mod))``.

    With the canonical choice s = sqrt(z_mod) the output is independent of
    z_mod at q = 2.  The truncation must capture the tail to relative 1e-12
    (checked by comparing the outermost shell against the total).
    """
    import numpy as np

    C, theta, s, z_mod = map(float, (C, theta, s, z_mod))
    q = float(q)
    d = int(d)
    if theta <= 0.0:
        raise ValueError(f"divergent parameterization: theta must be > 0, got {theta}")
    if C <= 0.0 or s <= 0.0 or z_mod <= 0.0:
        raise ValueError("C, s, z_mod must be positive")
    if truncation < 1:
        raise ValueError("truncation must be >= 1")

    rng = np.arange(-truncation, truncation + 1)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    norm_k = np.sqrt(sum(g.astype(float) ** 2 for g in grids))
    r = s * np.maximum(norm_k / math.sqrt(d) - 1.0, 0.0)
    amp = z_mod ** (d / 4.0 - d / (2.0 * q))
    terms = amp * np.exp(-theta * r * r / (4.0 * C * z_mod))
    total = float(np.sum(terms))
    shell = float(np.sum(terms[(np.max(np.abs(np.stack(grids)), axis=0) == truncation)]))
    if shell > 1e-12 * total:
        raise ValueError(
            f"truncation {truncation} too small: outer shell carries {shell / total:.2e} of the sum"
        )
    return s ** (d / 2.0 - d / q) * total
