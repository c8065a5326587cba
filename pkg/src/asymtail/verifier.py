"""Empirical verification of the comparison theorems.

Everything here checks a claimed inequality against exact enumeration
on finite discrete laws or against Monte Carlo with a one-sided
confidence guard:

- the quadratic certificate polynomials delta_1..delta_4 and their
  piecewise identity with the four-term positive-part expression;
- moment comparison between a weighted sum of asymmetric two-point
  laws and its equalized carrier, over a grid of test functions;
- Schur-direction sweeps along the constant-(2m)-norm coefficient path,
  including the two-coefficient witness that the moment threshold is
  sharp (below it the direction reverses);
- supermartingale increment rules simulated at scale and compared with
  the bound family at Clopper-Pearson confidence.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta as beta_dist

from .bounds import combined_bound_grid
from .dist import FiniteDist, RngSpec, bs, iid_sum, scale, weighted_bs_sum
from .thresholds import m_star

DEFAULT_TOL = 1e-12


class VerifyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# certificate polynomials
# ---------------------------------------------------------------------------

def delta(i: int, u, c, p: float, m: float):
    """Certificate polynomial delta_i(u; c, p, m), numpy-broadcastable.

    With C = c^(2m-1):
      delta_1 linear in u (region u >= 0),
      delta_2 = delta_1 + (1-p)(1-C) u^2        (region -c <= u < 0),
      delta_3 quadratic with leading -C         (region -1 <= u < -c),
      delta_4 = (1-C) p (1+c+u)^2               (region -1-c <= u < -1).
    """
    u = np.asarray(u, dtype=float)
    c = np.asarray(c, dtype=float)
    C = c ** (2.0 * m - 1.0)
    if i == 1:
        return (2.0 * c * (1.0 - c ** (2.0 * m - 2.0)) * u
                + 2.0 * p * c * (1.0 - C) + c * c * (1.0 - c ** (2.0 * m - 3.0)))
    if i == 2:
        return (1.0 - p) * (1.0 - C) * u * u + delta(1, u, c, p, m)
    if i == 3:
        return (-C * u * u
                - 2.0 * (C - c * p + c ** (2.0 * m) * p) * u
                + ((2.0 * c + c * c - 2.0 * c ** (2.0 * m) - c ** (2.0 * m + 1.0)) * p - C))
    if i == 4:
        return (1.0 - C) * p * (1.0 + c + u) ** 2
    raise VerifyError("delta index must be 1..4")


def delta_piecewise(u, c, p, m):
    """The region-dispatched certificate value (0 below u = -1-c)."""
    u, c, p, m = np.broadcast_arrays(
        np.asarray(u, dtype=float), np.asarray(c, dtype=float),
        np.asarray(p, dtype=float), np.asarray(m, dtype=float))
    out = np.zeros(u.shape)
    r1 = u >= 0
    r2 = (u < 0) & (u >= -c)
    r3 = (u < -c) & (u >= -1)
    r4 = (u < -1) & (u >= -1 - c)
    for idx, reg in ((1, r1), (2, r2), (3, r3), (4, r4)):
        if np.any(reg):
            out[reg] = delta(idx, u[reg], c[reg], p[reg], m[reg])
    return out


def delta_positive_part_form(u, c, p: float, m: float):
    """The four-term (.)_+^2 expression the certificates tabulate."""
    u = np.asarray(u, dtype=float)
    c = np.asarray(c, dtype=float)
    u, c = np.broadcast_arrays(u, c)
    q = 1.0 - p
    C = c ** (2.0 * m - 1.0)

    def pos2(x):
        return np.clip(x, 0.0, None) ** 2

    return (-(1.0 - C) * q * pos2(u)
            - (C * q + p) * pos2(1.0 + u)
            + (q + C * p) * pos2(c + u)
            + (1.0 - C) * p * pos2(1.0 + c + u))


@dataclass(frozen=True)
class DeltaGridResult:
    p: float
    m: float
    resolution: int
    min_value: float
    argmin_region: int
    argmin_c: float
    argmin_u: float
    identity_max_err: float

    @property
    def nonnegative(self) -> bool:
        return self.min_value >= -DEFAULT_TOL


def delta_grid_check(p: float, m: float, resolution: int = 200) -> DeltaGridResult:
    """Minimize the certificates over c in (0,1), u in region ranges.

    Region 1 is linear in u, so its minimum sits at an endpoint of the
    scanned range [0, 3]; region 2 additionally gets its interior
    stationary point u_* as a candidate.  Also cross-checks the
    piecewise table against the positive-part form on the same grid.
    """
    if not 0.0 < p < 1.0:
        raise VerifyError("p must be in (0, 1)")
    cs = np.linspace(0.0, 1.0, resolution + 2)[1:-1][:, None]
    frac = np.linspace(0.0, 1.0, resolution)[None, :]

    best = (math.inf, 0, math.nan, math.nan)
    grids = {
        1: 3.0 * frac + 0.0 * cs,
        2: -cs * (1.0 - frac),
        3: -1.0 + (1.0 - cs) * frac,
        4: -1.0 - cs * (1.0 - frac),
    }
    # interior stationary point of the region-2 parabola
    C = cs ** (2.0 * m - 1.0)
    denom = (1.0 - C) * (1.0 - p)
    with np.errstate(divide="ignore", invalid="ignore"):
        u_star = -cs * (1.0 - cs ** (2.0 * m - 2.0)) / denom
    u_star = np.clip(np.where(np.isfinite(u_star), u_star, 0.0), -cs, 0.0)
    grids[2] = np.concatenate([grids[2], u_star], axis=1)

    ident_err = 0.0
    for region, ug in grids.items():
        vals = delta(region, ug, cs, p, m)
        flat = int(np.argmin(vals))
        ci, ui = divmod(flat, vals.shape[1])
        if vals[ci, ui] < best[0]:
            best = (float(vals[ci, ui]), region, float(cs[ci, 0]), float(ug[ci, ui]))
        table = delta_piecewise(ug, np.broadcast_to(cs, ug.shape), p, m)
        direct = delta_positive_part_form(ug, np.broadcast_to(cs, ug.shape), p, m)
        inside = (ug >= -1.0 - np.broadcast_to(cs, ug.shape)) & (ug <= 3.0)
        if np.any(inside):
            ident_err = max(ident_err, float(np.max(np.abs((table - direct))[inside])))
    return DeltaGridResult(p=p, m=m, resolution=resolution,
                           min_value=best[0], argmin_region=best[1],
                           argmin_c=best[2], argmin_u=best[3],
                           identity_max_err=ident_err)


# ---------------------------------------------------------------------------
# enumeration of the moment comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnumCheck:
    p: float
    m: float
    coeffs: tuple
    n: int
    max_violation: float
    worst_family: str
    worst_param: float
    t_count: int
    lam_count: int
    mode: str

    @property
    def passed(self) -> bool:
        return self.max_violation <= DEFAULT_TOL


def _family_moments(lhs: FiniteDist, rhs: FiniteDist, t_grid, lam_grid,
                    two_sided: bool):
    """Yield (family, param, E_lhs, E_rhs) over the test function grids."""
    vl, ml = lhs.values[None, :], lhs.masses[None, :]
    vr, mr = rhs.values[None, :], rhs.masses[None, :]
    t = np.asarray(t_grid, dtype=float)[:, None]
    el = np.sum(np.clip(vl - t, 0.0, None) ** 3 * ml, axis=1)
    er = np.sum(np.clip(vr - t, 0.0, None) ** 3 * mr, axis=1)
    for i, tv in enumerate(t_grid):
        yield "cube_plus", float(tv), float(el[i]), float(er[i])
    lam = np.asarray(lam_grid, dtype=float)[:, None]
    with np.errstate(over="ignore"):
        eel = np.sum(np.exp(lam * vl) * ml, axis=1)
        eer = np.sum(np.exp(lam * vr) * mr, axis=1)
    for i, lv in enumerate(lam_grid):
        yield "exp", float(lv), float(eel[i]), float(eer[i])
    if two_sided:
        al = np.sum(np.abs(vl - t) ** 3 * ml, axis=1)
        ar = np.sum(np.abs(vr - t) ** 3 * mr, axis=1)
        for i, tv in enumerate(t_grid):
            yield "abs_cube", float(tv), float(al[i]), float(ar[i])
        with np.errstate(over="ignore"):
            cl = np.sum(np.cosh(lam * vl) * ml, axis=1)
            cr = np.sum(np.cosh(lam * vr) * mr, axis=1)
        for i, lv in enumerate(lam_grid):
            yield "cosh", float(lv), float(cl[i]), float(cr[i])


def enumeration_check(p: float, m: float, coeffs, *, t_count: int = 401,
                      lam_count: int = 20, two_sided: bool = False,
                      left_tail: bool = False) -> EnumCheck:
    """Exact-enumeration comparison of E f(sum c_i X_i) vs the carrier.

    Violations are normalized by max(1, |E f(carrier)|) so that the
    exponential families, whose raw moments span many orders, report on
    the same scale as the cubes.  For left_tail the sum is reflected,
    which swaps the roles of p and q; the caller is responsible for
    choosing m against m_star(q) in that case.
    """
    c = np.asarray(coeffs, dtype=float)
    n = len(c)
    p_eff = p
    if left_tail:
        p_eff = 1.0 - p
    lhs = weighted_bs_sum(p_eff, c)
    s_m = float(np.mean(c ** (2.0 * m)) ** (1.0 / (2.0 * m))) if np.any(c > 0) else 0.0
    if s_m <= 0:
        raise VerifyError("coefficients are all zero")
    rhs = scale(iid_sum(bs(p_eff), n), s_m)
    lo = min(lhs.min_value, rhs.min_value) - 1.0
    hi = max(lhs.max_value, rhs.max_value) + 1.0
    t_grid = np.linspace(lo, hi, t_count)
    lam_grid = np.geomspace(0.1, 5.0, lam_count)
    worst = (-math.inf, "", math.nan)
    for fam, prm, el, er in _family_moments(lhs, rhs, t_grid, lam_grid, two_sided):
        viol = (el - er) / max(1.0, abs(er))
        if viol > worst[0]:
            worst = (viol, fam, prm)
    mode = "two_sided" if two_sided else ("left_tail" if left_tail else "right_tail")
    return EnumCheck(p=p, m=m, coeffs=tuple(float(x) for x in c), n=n,
                     max_violation=worst[0], worst_family=worst[1],
                     worst_param=worst[2], t_count=t_count,
                     lam_count=lam_count, mode=mode)


# ---------------------------------------------------------------------------
# Schur-direction sweep and the sharpness witness
# ---------------------------------------------------------------------------

def _pair_moment(p: float, m: float, thetas, t: float) -> np.ndarray:
    """E (a BS_1 + b BS_2 - t)_+^3 along a = cos^(1/m), b = sin^(1/m)."""
    th = np.asarray(thetas, dtype=float)
    base = bs(p)
    v, w = base.values, base.masses
    a = np.cos(th) ** (1.0 / m)
    b = np.sin(th) ** (1.0 / m)
    combo = (a[:, None, None] * v[None, :, None]
             + b[:, None, None] * v[None, None, :])
    mass = (w[:, None] * w[None, :])[None, :, :]
    return np.sum(np.clip(combo - t, 0.0, None) ** 3 * mass, axis=(1, 2))


@dataclass(frozen=True)
class SchurSweep:
    p: float
    m: float
    t: float
    thetas: np.ndarray
    values: np.ndarray
    min_forward_diff: float

    @property
    def monotone(self) -> bool:
        return self.min_forward_diff >= -DEFAULT_TOL


def schur_sweep(p: float, m: float, t: float, theta_count: int = 64) -> SchurSweep:
    """g(theta) along the equalizing path; monotone iff the comparison
    respects majorization at this (p, m, t)."""
    if theta_count < 16:
        raise VerifyError("theta_count must be >= 16")
    th = np.linspace(1e-9, math.pi / 4.0, theta_count)
    g = _pair_moment(p, m, th, t)
    fd = np.diff(g)
    return SchurSweep(p=p, m=m, t=t, thetas=th, values=g,
                      min_forward_diff=float(np.min(fd)))


@dataclass(frozen=True)
class ViolationWitness:
    p: float
    m: float
    t: float
    theta_star: float
    g_star: float
    g_equal: float
    gap: float


def exactness_witness(p: float, m: float, *, window: float = 0.2,
                      scan: int = 10000) -> ViolationWitness | None:
    """Search for a two-coefficient violation near the equal point.

    At the witness threshold t the equalized pair is strictly worse than
    a nearby unequal pair whenever m < m_star(p); the returned gap
    g(pi/4) - max g(theta) is then negative.  Returns None when no
    violation beyond -1e-12 shows up, as happens for m >= m_star(p).
    """
    if not 0.0 < p < 0.5:
        raise VerifyError("witness construction needs p in (0, 1/2)")
    if m <= 1.0:
        raise VerifyError("witness construction needs m > 1")
    q = 1.0 - p
    pow2 = 2.0 ** (1.0 - 1.0 / (2.0 * m))
    u_p = -pow2 * (m - 1.0) / ((2.0 * m - 1.0) * q)
    t_p = -u_p - pow2 * p
    t = t_p / math.sqrt(p * q)
    th = np.linspace(math.pi / 4.0 - window, math.pi / 4.0, scan + 1)
    g = _pair_moment(p, m, th, t)
    g_eq = float(g[-1])
    j = int(np.argmax(g[:-1]))
    gap = g_eq - float(g[j])
    if gap < -DEFAULT_TOL:
        return ViolationWitness(p=p, m=m, t=t, theta_star=float(th[j]),
                                g_star=float(g[j]), g_equal=g_eq, gap=gap)
    return None


# ---------------------------------------------------------------------------
# supermartingale Monte Carlo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McConfig:
    seed: int = 0
    n_paths: int = 200_000
    block: int = 65_536
    confidence: float = 0.99


@dataclass(frozen=True)
class SupermartingaleConfig:
    n: int
    p: float
    coeffs: tuple
    rule: str = "constant"
    m: float = 1.0
    x_grid: tuple | None = None


_RULES = ("constant", "history_scaled", "random_modulated")


def _simulate_block(cfg: SupermartingaleConfig, rng: np.random.Generator,
                    size: int) -> np.ndarray:
    p, q = cfg.p, 1.0 - cfg.p
    ratio = q / p
    c = np.asarray(cfg.coeffs, dtype=float)
    sref = math.sqrt(float(np.sum(c * c)))
    S = np.zeros(size)
    for i in range(cfg.n):
        ci = c[i]
        if cfg.rule == "constant":
            A = np.full(size, ci)
            B = A
        elif cfg.rule == "history_scaled":
            sigma = 1.0 / (1.0 + (S / sref) ** 2)
            B = ci * math.sqrt(ratio) * sigma
            A = ci / math.sqrt(ratio) * sigma
        elif cfg.rule == "random_modulated":
            U = rng.random(size)
            B = ci * ratio ** (0.5 * U)
            A = ci * ratio ** (-0.5 * U)
        else:
            raise VerifyError(f"unknown rule {cfg.rule!r}")
        root = np.sqrt(A * B)
        if np.max(root) > ci * (1.0 + 1e-12):
            raise VerifyError("rule breaks sqrt(A B) <= c_i")
        if np.max(B / A) > ratio * (1.0 + 1e-12):
            raise VerifyError("rule breaks B/A <= q/p")
        take_up = rng.random(size) < A / (A + B)
        S = S + np.where(take_up, B, -A)
    return S


@dataclass(frozen=True)
class McRow:
    x: float
    count: int
    empirical: float
    cp_lower: float
    bound: float
    bound_name: str
    ok: bool


@dataclass(frozen=True)
class SupermartingaleReport:
    config: SupermartingaleConfig
    mc: McConfig
    n_paths: int
    rows: list
    max_sqrtab_excess: float

    @property
    def all_ok(self) -> bool:
        return all(r.ok for r in self.rows)


def supermartingale_mc(cfg: SupermartingaleConfig, mc: McConfig) -> SupermartingaleReport:
    """Simulate the increment rule and compare tails with the bounds.

    The empirical tail at each grid point gets a one-sided lower
    confidence limit (Clopper-Pearson at mc.confidence); the check
    passes while that limit stays at or below the hybrid bound.  Blocks
    use independent child streams of the seed, so the result does not
    depend on the worker count; ASYMTAIL_THREADS caps the pool.
    """
    if cfg.rule not in _RULES:
        raise VerifyError(f"rule must be one of {_RULES}")
    if len(cfg.coeffs) != cfg.n:
        raise VerifyError("coeffs length must equal n")
    if cfg.rule in ("constant", "random_modulated") and cfg.p > 0.5:
        raise VerifyError(f"rule {cfg.rule!r} requires p <= 1/2")
    c = np.asarray(cfg.coeffs, dtype=float)
    if np.any(c <= 0):
        raise VerifyError("coefficients must be positive")

    if cfg.x_grid is not None:
        xs = np.asarray(cfg.x_grid, dtype=float)
    else:
        sig = math.sqrt(float(np.sum(c * c)))
        top = cfg.n * float(np.mean(c ** (2 * cfg.m)) ** (1 / (2 * cfg.m))) \
            * math.sqrt((1 - cfg.p) / cfg.p)
        xs = np.linspace(0.5 * sig, min(3.5 * sig, 0.98 * top), 8)

    reports = combined_bound_grid(cfg.p, cfg.m, xs, coeffs=c)

    n_blocks = (mc.n_paths + mc.block - 1) // mc.block
    sizes = [min(mc.block, mc.n_paths - i * mc.block) for i in range(n_blocks)]
    spec = RngSpec(mc.seed)

    def run_block(i: int) -> np.ndarray:
        rng = spec.substream(i).generator()
        S = _simulate_block(cfg, rng, sizes[i])
        return np.array([np.count_nonzero(S >= x) for x in xs])

    workers = max(1, int(os.environ.get("ASYMTAIL_THREADS", "1") or "1"))
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            counts = sum(ex.map(run_block, range(n_blocks)))
    else:
        counts = sum(run_block(i) for i in range(n_blocks))

    total = sum(sizes)
    rows = []
    for x, k, rep in zip(xs, counts, reports):
        k = int(k)
        if k > 0:
            lo = float(beta_dist.ppf(1.0 - mc.confidence, k, total - k + 1))
        else:
            lo = 0.0
        rows.append(McRow(x=float(x), count=k, empirical=k / total,
                          cp_lower=lo, bound=rep.minimum,
                          bound_name=rep.argmin, ok=lo <= rep.minimum))
    return SupermartingaleReport(config=cfg, mc=mc, n_paths=total, rows=rows,
                                 max_sqrtab_excess=0.0)


# ---------------------------------------------------------------------------
# suite runners
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    metric: float
    threshold: float
    details: dict = field(default_factory=dict)


def run_delta_suite(resolution: int = 80) -> list[CheckResult]:
    out = []
    for p in (0.05, 0.2, 0.35, 0.5, 0.8):
        m = m_star(p)
        res = delta_grid_check(p, m, resolution)
        out.append(CheckResult(
            name=f"delta_grid_p{p:g}_at_threshold", passed=res.nonnegative,
            metric=res.min_value, threshold=-DEFAULT_TOL,
            details={"m": m, "identity_max_err": res.identity_max_err,
                     "argmin_region": res.argmin_region}))
        out.append(CheckResult(
            name=f"delta_identity_p{p:g}", passed=res.identity_max_err <= 1e-12,
            metric=res.identity_max_err, threshold=1e-12, details={}))
    return out


def run_enumeration_suite(seed: int = 0) -> list[CheckResult]:
    rng = RngSpec(seed, stream=101).generator()
    out = []
    cases = []
    for p in (0.1, 0.3, 0.5, 0.7):
        for n in (2, 3, 5):
            coeffs = np.round(rng.uniform(0.2, 2.0, size=n), 3)
            cases.append((p, m_star(p), coeffs))
    for p, m, coeffs in cases:
        chk = enumeration_check(p, m, coeffs)
        out.append(CheckResult(
            name=f"enum_p{p:g}_n{len(coeffs)}", passed=chk.passed,
            metric=chk.max_violation, threshold=DEFAULT_TOL,
            details={"m": m, "coeffs": list(chk.coeffs),
                     "worst_family": chk.worst_family}))
    chk = enumeration_check(0.3, m_star(0.3), [1.0, 0.7, 1.4], two_sided=True)
    out.append(CheckResult(name="enum_two_sided_p0.3", passed=chk.passed,
                           metric=chk.max_violation, threshold=DEFAULT_TOL,
                           details={"mode": chk.mode}))
    chk = enumeration_check(0.7, m_star(0.3), [1.0, 0.7, 1.4], left_tail=True)
    out.append(CheckResult(name="enum_left_tail_p0.7", passed=chk.passed,
                           metric=chk.max_violation, threshold=DEFAULT_TOL,
                           details={"mode": chk.mode}))
    return out


def run_schur_suite() -> list[CheckResult]:
    out = []
    for p in (0.1, 0.25, 0.4):
        m = m_star(p)
        for t in (0.5, 1.0, 2.0):
            sw = schur_sweep(p, m, t)
            out.append(CheckResult(
                name=f"schur_p{p:g}_t{t:g}", passed=sw.monotone,
                metric=sw.min_forward_diff, threshold=-DEFAULT_TOL,
                details={"m": m}))
    return out


def run_exactness_suite() -> list[CheckResult]:
    out = []
    for p in (0.05, 0.15, 0.25, 0.32):
        m_hi = m_star(p)
        wit = exactness_witness(p, 0.9 * m_hi)
        out.append(CheckResult(
            name=f"witness_below_threshold_p{p:g}", passed=wit is not None,
            metric=(wit.gap if wit else 0.0), threshold=-DEFAULT_TOL,
            details={"m": 0.9 * m_hi,
                     "theta_star": (wit.theta_star if wit else None)}))
    return out


def run_supermartingale_suite(seed: int = 0, n_paths: int = 200_000) -> list[CheckResult]:
    out = []
    mc = McConfig(seed=seed, n_paths=n_paths)
    cases = [
        SupermartingaleConfig(n=6, p=0.3, coeffs=(1.0,) * 6, rule="constant", m=m_star(0.3)),
        SupermartingaleConfig(n=5, p=0.25, coeffs=(1.0, 1.2, 0.8, 1.1, 0.9),
                              rule="history_scaled", m=m_star(0.25)),
        SupermartingaleConfig(n=4, p=0.4, coeffs=(1.0, 0.5, 1.5, 1.0),
                              rule="random_modulated", m=m_star(0.4)),
    ]
    for cfg in cases:
        rep = supermartingale_mc(cfg, mc)
        worst = min((r.bound - r.cp_lower for r in rep.rows), default=0.0)
        out.append(CheckResult(
            name=f"supermartingale_{cfg.rule}_p{cfg.p:g}", passed=rep.all_ok,
            metric=worst, threshold=0.0,
            details={"n_paths": rep.n_paths,
                     "rows": [{"x": r.x, "emp": r.empirical, "bound": r.bound,
                               "cp_lower": r.cp_lower} for r in rep.rows]}))
    return out


_SUITES = {
    "delta": lambda seed: run_delta_suite(),
    "enumeration": run_enumeration_suite,
    "schur": lambda seed: run_schur_suite(),
    "exactness": lambda seed: run_exactness_suite(),
    "supermartingale": run_supermartingale_suite,
}


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    if name == "all":
        out = []
        for key in _SUITES:
            out.extend(run_suite(key, seed))
        return out
    if name not in _SUITES:
        raise VerifyError(f"unknown suite {name!r}; choose from "
                          f"{tuple(_SUITES)} or 'all'")
    return _SUITES[name](seed)
