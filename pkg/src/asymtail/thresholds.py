"""Threshold curves and optimized constants for the moment-comparison bounds.

The central object is the exact threshold

    m_star(p) = (1 + p + 2 p^2) / (2 (sqrt(p - p^2) + 2 p^2))   for 0 < p <= 1/2,
    m_star(p) = 1                                               for 1/2 <= p < 1,

the least power m such that E f(sum c_i BS_i) <= E f(s_m * sum BS_i) holds
for every f in the one-sided third-order convex cone, where BS_i are iid
standardized Bernoullis bs(p) and s_m = ((1/n) sum c_i^{2m})^{1/(2m)}.
Its inverse on [1, inf) is

    p_star(m) = 2 / ((2m - 1) (2m + 1 + sqrt(4 (m-1) (m+2) + 1))),

and p_star_upper(m) is the larger root of the same quadratic
2 (2m-1)^2 p^2 - (4 m^2 - 1) p + 1 = 0.

A cheaper sufficient threshold comes from the exponential class: the
parametric curve k -> (m_tilde(k), p_tilde(k)),

    m_tilde(k) = (e^k + 1) k / (2 (e^k - 1)),
    p_tilde(k) = (e^k - 1 - k) / ((e^k - 1) (1 + k + (k - 1) e^k)),

whose inverse k_tilde(p) is found by a bracketed Newton iteration, plus
the closed-form upper envelope m_exp_up(p) = (1 - 2p - ln 2p)/(2 (1 - 2p)).

For symmetric three-point summands st(p) the exact threshold is only
partially known; this module exposes the proven envelope
[m_st_low, m_st_high] and the conjectured curve m_conj built from
m_one(p) = sqrt((2-p)/p)/2 and the root m_zero(p) of a degree-6
polynomial (flagged conjectured; nothing downstream consumes it).

Optimized tail constants:

    c_const(alpha, beta) = Gamma(alpha+1) (e/alpha)^alpha
                           / (Gamma(beta+1) (e/beta)^beta),   c_{alpha,0} drops the denominator;
    k_const(alpha, beta) = beta^beta (alpha-beta)^(alpha-beta) / alpha^alpha;
    k1_const(alpha, beta) = sup_{sigma>0} sigma^{-beta (alpha-1)}
                            (int_0^sigma beta s^{beta-1} / (1+s) ds)^alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .optimize import golden_section, safeguarded_newton

SQRT2_MINUS_1 = math.sqrt(2.0) - 1.0


class ThresholdError(ValueError):
    """Domain violation or failed certification in a threshold computation."""


# ---------------------------------------------------------------------------
# exact threshold m_star and its inverse
# ---------------------------------------------------------------------------

def m_star(p: float) -> float:
    """Exact comparison threshold in m for asymmetry parameter p."""
    if not 0.0 < p < 1.0:
        raise ThresholdError("m_star requires p in (0, 1)")
    if p >= 0.5:
        return 1.0
    return (1.0 + p + 2.0 * p * p) / (2.0 * (math.sqrt(p - p * p) + 2.0 * p * p))


def p_star(m: float) -> float:
    """Inverse threshold: least p for which m suffices; p_star(1) = 1/2.

    Uses the rationalized form of the smaller quadratic root, which has
    no cancellation for large m.
    """
    if m < 1.0:
        raise ThresholdError("p_star requires m >= 1")
    disc = math.sqrt(4.0 * (m - 1.0) * (m + 2.0) + 1.0)
    return 2.0 / ((2.0 * m - 1.0) * (2.0 * m + 1.0 + disc))


def p_star_upper(m: float) -> float:
    """Larger root of 2 (2m-1)^2 p^2 - (4m^2-1) p + 1 = 0; equals 1 at m = 1."""
    if m < 1.0:
        raise ThresholdError("p_star_upper requires m >= 1")
    disc = math.sqrt(4.0 * (m - 1.0) * (m + 2.0) + 1.0)
    return (2.0 * m + 1.0 + disc) / (4.0 * (2.0 * m - 1.0))


# ---------------------------------------------------------------------------
# exponential-class threshold
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamPoint:
    """One point of the exponential-class parametric curve."""
    k: float
    m: float
    p: float


def m_tilde(k: float) -> float:
    if k <= 0:
        raise ThresholdError("m_tilde requires k > 0")
    em1 = math.expm1(k)
    return (em1 + 2.0) * k / (2.0 * em1)


def p_tilde(k: float) -> float:
    if k <= 0:
        raise ThresholdError("p_tilde requires k > 0")
    em1 = math.expm1(k)
    if k < 1e-3:
        num = 0.5 * k * k * (1.0 + k / 3.0 + k * k / 12.0 + k ** 3 / 60.0)
    else:
        num = em1 - k
    # 1 + k + (k - 1) e^k rewritten without the unit cancellation
    den2 = 2.0 * k - (1.0 - k) * em1
    return num / (em1 * den2)


def m_exp_parametric(k: float) -> ParamPoint:
    return ParamPoint(k=k, m=m_tilde(k), p=p_tilde(k))


# Taylor coefficients of F(k) / k^2 about k = 0, F as below: the j-th
# entry is (1/(j+2)!, coefficient of p).  Every unit-size term of F
# cancels pairwise near 0, so the direct form drowns in rounding there.
_F_SERIES = (
    (1.0 / 2.0, -1.0),
    (1.0 / 6.0, -1.0),
    (1.0 / 24.0, -3.0 / 4.0),
    (1.0 / 120.0, -5.0 / 12.0),
    (1.0 / 720.0, -13.0 / 72.0),
    (1.0 / 5040.0, -23.0 / 360.0),
    (1.0 / 40320.0, -11.0 / 576.0),
    (1.0 / 362880.0, -299.0 / 60480.0),
)


def _k_residual(p: float, k: float) -> tuple[float, float]:
    # F(k) = e^k - 1 - k + (1 + k - 2 e^k + e^{2k} (1 - k)) p.  For large
    # k the residual is rescaled by e^{-2k} so nothing overflows; for
    # small k the factored series F / k^2 is used instead.  Both carry
    # the sign of F, which is all the bracketing logic needs.
    if k < 0.05:
        f = 0.0
        df = 0.0
        for j in reversed(range(len(_F_SERIES))):
            a, b = _F_SERIES[j]
            cj = a + b * p
            f = f * k + cj
            if j > 0:
                df = df * k + j * cj
        return f, df
    emk = math.exp(-k)
    em2k = emk * emk
    f = emk - (1.0 + k) * em2k + ((1.0 + k) * em2k - 2.0 * emk + (1.0 - k)) * p
    df = emk - em2k + (em2k - 2.0 * emk + (1.0 - 2.0 * k)) * p
    return f, df


def k_tilde(p: float) -> float:
    """Solve p_tilde(k) = p for k > 0 (0 < p < 1/2).

    Bracketed Newton on [lo, 60].  The seed follows the two asymptotic
    regimes of the root: k ~ 3 (1/2 - p) near p = 1/2, and for small p
    the fixed point of k = log(1 / (p (k - 1))), which comes from the
    dominant balance e^{2k} (1 - k) p + e^k ~ 0 in the residual.
    """
    if not 0.0 < p < 0.5:
        raise ThresholdError("k_tilde requires p in (0, 1/2)")
    lo = min(1e-8, 0.5 - p)
    hi = 60.0
    if p >= 0.2:
        k0 = 3.0 * (0.5 - p)
    else:
        k0 = math.log(1.0 / p)
        for _ in range(4):
            k0 = math.log(1.0 / (p * max(k0 - 1.0, 0.5)))
    k0 = min(max(k0, lo), hi - 1.0)
    try:
        root, _ = safeguarded_newton(lambda k: _k_residual(p, k), lo, hi, k0,
                                     xtol=1e-13, max_iter=100)
    except ValueError as exc:
        raise ThresholdError(f"k_tilde({p!r}) failed: {exc}") from exc
    return root


def m_exp(p: float) -> float:
    """Exponential-class sufficient threshold; 1 for p >= 1/2."""
    if not 0.0 < p < 1.0:
        raise ThresholdError("m_exp requires p in (0, 1)")
    if p >= 0.5:
        return 1.0
    return m_tilde(k_tilde(p))


def m_exp_up(p: float) -> float:
    """Closed-form upper envelope of m_exp on (0, 1/2)."""
    if not 0.0 < p < 0.5:
        raise ThresholdError("m_exp_up requires p in (0, 1/2)")
    return (1.0 - 2.0 * p - math.log(2.0 * p)) / (2.0 * (1.0 - 2.0 * p))


# ---------------------------------------------------------------------------
# symmetric three-point thresholds
# ---------------------------------------------------------------------------

def r_sym(p: float) -> float:
    """Asymmetry parameter of the bs pair whose sum carries st(p): r (1-r) = p/2."""
    if not 0.0 < p <= 0.5:
        raise ThresholdError("r_sym requires p in (0, 1/2]")
    return (1.0 - math.sqrt(1.0 - 2.0 * p)) / 2.0


def m_st_high(p: float) -> float:
    """Proven upper envelope for the symmetric threshold: m_star(r_sym(p))."""
    if not 0.0 < p <= 1.0:
        raise ThresholdError("m_st_high requires p in (0, 1]")
    if p > 0.5:
        return 1.0
    s = math.sqrt(1.0 - 2.0 * p)
    return (5.0 - 3.0 * s - 2.0 * p) / (4.0 * (math.sqrt(p / 2.0) + 1.0 - s - p))


def m_one(p: float) -> float:
    """Second-vs-2m-th moment necessary bound: sqrt((2-p)/p)/2."""
    if not 0.0 < p <= 1.0:
        raise ThresholdError("m_one requires p in (0, 1]")
    return 0.5 * math.sqrt((2.0 - p) / p)


def m_low_sym(p: float) -> float:
    """Entropy-flavored necessary bound: 3 / (2 (1 + log2(1 + p)))."""
    if not 0.0 < p <= 1.0:
        raise ThresholdError("m_low_sym requires p in (0, 1]")
    return 3.0 / (2.0 * (1.0 + math.log2(1.0 + p)))


def m_st_low(p: float) -> float:
    """Proven lower envelope: max(1, m_one, m_low_sym); equals 1 past sqrt(2)-1."""
    return max(1.0, m_one(p), m_low_sym(p))


def _z_poly(p: float, z: np.ndarray | float):
    return (((9 * p * p - 24 * p + 16) * z ** 6)
            + ((-36 * p * p + 120 * p - 96) * z ** 5)
            + ((36 * p * p - 216 * p + 240) * z ** 4)
            + ((-20 * p ** 3 + 60 * p * p + 120 * p - 320) * z ** 3)
            + ((72 * p ** 3 - 168 * p * p + 96 * p + 240) * z * z)
            + ((-96 * p ** 3 + 144 * p * p - 144 * p - 96) * z)
            + (4 * p ** 4 + 40 * p ** 3 - 44 * p * p + 48 * p + 16))


@dataclass(frozen=True)
class ConjecturalValue:
    """A numeric value that rests on an unproven claim; never feeds a bound."""
    value: float
    conjectured: bool = True


def m_zero(p: float) -> ConjecturalValue:
    """Conjectured symmetric threshold branch 1 / (2 log2 z(p)).

    z(p) is the root of a degree-6 polynomial in (0, sqrt(2)); uniqueness
    is certified by a sign-change count on a 1e4-point grid before the
    bisection refines the bracket to 1e-12.
    """
    if not 0.0 < p < SQRT2_MINUS_1:
        raise ThresholdError("m_zero requires p in (0, sqrt(2)-1)")
    zs = np.linspace(1e-9, math.sqrt(2.0), 10_000)
    vals = _z_poly(p, zs)
    signs = np.sign(vals)
    nz = signs != 0
    flips = np.nonzero(np.diff(signs[nz]) != 0)[0]
    if len(flips) != 1:
        raise ThresholdError(f"z-root not unique for p={p!r}: {len(flips)} sign changes")
    idx_nz = np.nonzero(nz)[0]
    lo = float(zs[idx_nz[flips[0]]])
    hi = float(zs[idx_nz[flips[0] + 1]])
    for _ in range(200):
        if hi - lo <= 1e-12:
            break
        mid = 0.5 * (lo + hi)
        if (_z_poly(p, lo) > 0) == (_z_poly(p, mid) > 0):
            lo = mid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    return ConjecturalValue(value=1.0 / (2.0 * math.log2(z)))


@lru_cache(maxsize=1)
def _p_zero_one() -> float:
    # crossing of m_one and m_zero, around 0.3879
    return brentq(lambda p: m_one(p) - m_zero(p).value, 0.30, 0.41, xtol=1e-13)


def m_conj(p: float) -> ConjecturalValue:
    """Conjectured symmetric threshold: m_one, then m_zero, then 1.

    The value is proven (conjectured=False) only on p >= sqrt(2)-1 where
    the threshold is exactly 1.
    """
    if not 0.0 < p <= 1.0:
        raise ThresholdError("m_conj requires p in (0, 1]")
    if p >= SQRT2_MINUS_1:
        return ConjecturalValue(value=1.0, conjectured=False)
    if p <= _p_zero_one():
        return ConjecturalValue(value=m_one(p))
    return m_zero(p)


def m_st_exp_interval(p: float) -> tuple[float, float]:
    """Enclosure [1, m_exp(r_sym(p))] for the symmetric exponential-class
    threshold; exposed as an interval because only the envelope is
    established."""
    if not 0.0 < p <= 0.5:
        raise ThresholdError("m_st_exp_interval requires p in (0, 1/2]")
    r = r_sym(p)
    hi = 1.0 if r >= 0.5 else m_exp(r)
    return (1.0, max(1.0, hi))


@dataclass(frozen=True)
class SymThresholds:
    """Envelope (and conjecture) for the symmetric three-point threshold."""
    p: float
    m_low: float
    m_high: float
    m_conj: float | None = None
    conjectured: bool = True


def sym_thresholds(p: float) -> SymThresholds:
    conj = m_conj(p)
    return SymThresholds(p=p, m_low=m_st_low(p), m_high=m_st_high(p),
                         m_conj=conj.value, conjectured=conj.conjectured)


# ---------------------------------------------------------------------------
# optimized constants
# ---------------------------------------------------------------------------

def _log_c0(a: float) -> float:
    # log( Gamma(a+1) (e/a)^a ), with the empty product 1 at a = 0
    if a == 0.0:
        return 0.0
    return math.lgamma(a + 1.0) + a * (1.0 - math.log(a))


def c_const(alpha: float, beta: float = 0.0) -> float:
    """Tail-comparison constant c_{alpha,beta}; c_{alpha,0} when beta=0."""
    if alpha < 0 or beta < 0 or beta > alpha:
        raise ThresholdError("c_const requires 0 <= beta <= alpha")
    if beta == alpha:
        return 1.0
    return math.exp(_log_c0(alpha) - _log_c0(beta))


def k_const(alpha: float, beta: float) -> float:
    """Maximal-function constant beta^beta (alpha-beta)^(alpha-beta) / alpha^alpha."""
    if not 0.0 < beta < alpha:
        raise ThresholdError("k_const requires 0 < beta < alpha")
    return math.exp(beta * math.log(beta)
                    + (alpha - beta) * math.log(alpha - beta)
                    - alpha * math.log(alpha))


def _tail_integral(sigma: float, beta: float) -> float:
    # int_0^sigma beta s^{beta-1} / (1+s) ds, split so the beta < 1
    # endpoint singularity is removed by the substitution u = s^beta.
    if sigma <= 0:
        return 0.0
    total = 0.0
    head = min(1.0, sigma)
    if beta < 1.0:
        val, _ = quad(lambda u: 1.0 / (1.0 + u ** (1.0 / beta)), 0.0, head ** beta,
                      epsabs=5e-11, epsrel=1e-12, limit=200)
        total += val
    else:
        val, _ = quad(lambda s: beta * s ** (beta - 1.0) / (1.0 + s), 0.0, head,
                      epsabs=5e-11, epsrel=1e-12, limit=200)
        total += val
    if sigma > 1.0:
        val, _ = quad(lambda s: beta * s ** (beta - 1.0) / (1.0 + s), 1.0, sigma,
                      epsabs=5e-11, epsrel=1e-12, limit=200)
        total += val
    return total


def k1_const(alpha: float, beta: float) -> float:
    """sup_sigma sigma^{-beta (alpha-1)} (int_0^sigma beta s^{beta-1}/(1+s) ds)^alpha.

    Golden-section over log sigma in [-12, 12]; the integrand is handled
    by adaptive quadrature at absolute tolerance 1e-10.
    """
    if not 0.0 < beta < alpha:
        raise ThresholdError("k1_const requires 0 < beta < alpha")

    def neg_log_obj(w: float) -> float:
        sigma = math.exp(w)
        integral = _tail_integral(sigma, beta)
        if integral <= 0:
            return math.inf
        return -(alpha * math.log(integral) - beta * (alpha - 1.0) * w)

    w_star, neg = golden_section(neg_log_obj, -12.0, 12.0, rtol=1e-12)
    return math.exp(-neg)


@dataclass(frozen=True)
class KMaxConsts:
    """Closed-form k, optimized k1, and their ratio k1/k (>= 1)."""
    alpha: float
    beta: float
    k: float
    k1: float

    @property
    def ratio(self) -> float:
        return self.k1 / self.k


def k_max_consts(alpha: float, beta: float) -> KMaxConsts:
    return KMaxConsts(alpha=alpha, beta=beta, k=k_const(alpha, beta),
                      k1=k1_const(alpha, beta))


# ---------------------------------------------------------------------------
# table emission
# ---------------------------------------------------------------------------

THRESHOLD_COLUMNS = ("p", "m_star", "p_star_inverse", "m_exp", "m_exp_up",
                     "m_st_low", "m_st_high", "m_conj")


def threshold_row(p: float) -> dict:
    """One row of the threshold table at asymmetry p (None = out of domain)."""
    ms = m_star(p)
    row = {
        "p": p,
        "m_star": ms,
        "p_star_inverse": p_star(ms),
        "m_exp": m_exp(p),
        "m_exp_up": m_exp_up(p) if p < 0.5 else None,
        "m_st_low": m_st_low(p),
        "m_st_high": m_st_high(p),
        "m_conj": m_conj(p).value,
    }
    return row


def threshold_table(ps) -> list[dict]:
    return [threshold_row(float(p)) for p in ps]
