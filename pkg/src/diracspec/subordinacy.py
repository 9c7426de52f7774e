"""Subordinacy analysis for the borderline regime m == q.

For negative spectral parameters the solutions grow like q^(1/4) in one
component and decay like q^(-1/4) in the other.  Rescaling

    v1 = (gamma / Lambda)^(1/4) u1,   v2 = (Lambda / gamma)^(1/4) u2,

with gamma = 2q - lambda and Lambda = |lambda|, turns the channel equation
into another channel equation with coefficients

    Q = sqrt(Lambda gamma),   L = k/r - gamma'/(4 gamma),   M = 0,

whose solutions are all bounded and of comparable size.  The oscillation of
the rescaled phase then spreads the growing and decaying parts so evenly
between any two solutions that neither can be negligible against the other:
cumulative norm ratios stay bounded away from zero.  For positive spectral
parameters the same machinery exhibits the opposite behaviour: one
direction decays against every other, and matching it to the solution
recessive at the origin locates discrete eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp

from .boundedness import auto_start_radius, comparability_constant
from .coefficients import CoefficientModel, assemble_channel, models_equal
from .hypotheses import (
    SATISFIED,
    check_a_conditions,
    check_b_conditions,
    check_c_conditions,
    worst_verdict,
)
from .solver import (
    PreconditionError,
    SolveConfig,
    frobenius_radius,
    integrate_pruefer,
    propagate,
    s_reparam,
)

__all__ = [
    "TransformedChannel",
    "CensusResult",
    "SubordinacyReport",
    "transform",
    "theta_census",
    "census_from_phase",
    "subordinacy_ratio",
    "eigen_shoot",
    "classify_spectrum",
    "decaying_direction",
]


@dataclass(frozen=True)
class TransformedChannel:
    """Rescaled channel for m == q and negative spectral parameter."""

    model: CoefficientModel
    k: int
    lam: float

    def __post_init__(self):
        if self.lam >= 0.0:
            raise ValueError("the rescaling is defined for negative spectral "
                             "parameters only")
        if int(self.k) == 0:
            raise ValueError("angular quantum number k must be nonzero")

    @property
    def Lambda(self) -> float:
        return abs(self.lam)

    def gamma(self, r):
        return 2.0 * self.model.q.value(r) - self.lam

    def coeffs(self, r):
        g = self.gamma(r)
        Q = np.sqrt(self.Lambda * g)
        L = self.k / np.asarray(r, dtype=float) - \
            self.model.q.derivative(r) / (2.0 * g)
        z = Q * 0.0
        return Q, z, L, np.abs(L)

    def scalar_qml(self, r):
        g = 2.0 * self.model.q._scalar(r) - self.lam
        Q = math.sqrt(self.Lambda * g)
        L = self.k / r - float(self.model.q._d1(r)) / (2.0 * g)
        return Q, 0.0, L

    def scale(self, r):
        """(gamma / Lambda)^(1/4), the component rescaling factor."""
        return (self.gamma(r) / self.Lambda) ** 0.25

    def forward(self, r, u1, u2):
        f = self.scale(r)
        return f * u1, u2 / f

    def inverse(self, r, v1, v2):
        f = self.scale(r)
        return v1 / f, f * v2

    def label(self) -> str:
        return f"transformed(k={self.k},lambda={self.lam:g})"


def transform(model: CoefficientModel, k: int, lam: float) -> TransformedChannel:
    """Build the rescaled channel; requires m == q and lam < 0."""
    equal, where = models_equal(model)
    if not equal:
        raise ValueError(f"the rescaling requires m == q; first mismatch "
                         f"near r = {where:g}")
    if lam >= 0.0:
        raise ValueError("the rescaling is defined for negative spectral "
                         "parameters only")
    return TransformedChannel(model=model, k=k, lam=float(lam))


# ---------------------------------------------------------------------------
# phase census


@dataclass(frozen=True)
class CensusResult:
    ns: list
    J_lengths: list
    K_lengths: list
    violations: list
    s_resolution: float
    guard_max: float
    n_first: int
    s_offset: float

    def to_dict(self):
        return {"kind": "census", "ns": self.ns, "J_lengths": self.J_lengths,
                "K_lengths": self.K_lengths, "violations": self.violations,
                "s_resolution": self.s_resolution, "guard_max": self.guard_max,
                "n_first": self.n_first, "s_offset": self.s_offset}


def census_from_phase(s, theta, guard_max: float = 0.0) -> CensusResult:
    """Interval census of an increasing phase against the bands
    [-3pi/4, -pi/4] + n pi (J) and [-pi/4, pi/4] + n pi (K), measured in the
    integrated-coefficient variable s."""
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(np.diff(theta) <= 0.0):
        raise PreconditionError("phase must be strictly increasing for the "
                                "census")
    # band boundaries are the odd multiples of pi/4:
    # J_n runs over [(4n-3) pi/4, (4n-1) pi/4], K_n over the next quarter turn
    n_lo = int(math.ceil((theta[0] * 4.0 / math.pi + 3.0) / 4.0))
    n_hi = int(math.floor((theta[-1] * 4.0 / math.pi - 1.0) / 4.0))
    ns, J_lengths, K_lengths = [], [], []
    s_res = float(np.max(np.diff(s)))
    slack = 1.5 * s_res
    violations = []
    s_offset = None
    for n in range(n_lo, n_hi + 1):
        edges = np.array([(4 * n - 3), (4 * n - 1), (4 * n + 1)]) * math.pi / 4.0
        sj = np.interp(edges, theta, s)
        if s_offset is None:
            s_offset = float(sj[0])
        J = float(sj[1] - sj[0])
        K = float(sj[2] - sj[1])
        ns.append(n)
        J_lengths.append(J)
        K_lengths.append(K)
        for name, val in (("J", J), ("K", K)):
            if not (math.pi / 3.0 - slack <= val <= math.pi + slack):
                violations.append({"n": n, "interval": name, "length": val})
    return CensusResult(ns=ns, J_lengths=J_lengths, K_lengths=K_lengths,
                        violations=violations, s_resolution=s_res,
                        guard_max=guard_max, n_first=ns[0] if ns else 0,
                        s_offset=s_offset if s_offset is not None else 0.0)


def theta_census(traj, guard: float = 0.5) -> CensusResult:
    """Census of a solved phase in the s-variable.

    Requires the trajectory to carry the s-reparameterization and the
    channel to satisfy |L|/Q <= guard on the whole range (this pins the
    phase speed dTheta/ds inside [1/2, 3/2]).
    """
    if traj.s is None:
        raise ValueError("trajectory lacks the s-variable; apply s_reparam "
                         "first")
    if traj.theta is None:
        raise ValueError("trajectory lacks a continuous phase")
    Q, _, L, _ = traj.channel.coeffs(traj.grid)
    ratio = np.abs(L) / Q
    worst = float(np.max(ratio))
    if worst > guard:
        bad = float(traj.grid[int(np.argmax(ratio > guard))])
        raise PreconditionError(f"|L|/Q exceeds {guard:g} at r = {bad:g}; "
                                f"census refused")
    return census_from_phase(traj.s, traj.theta, guard_max=worst)


# ---------------------------------------------------------------------------
# cumulative norm ratios


@dataclass(frozen=True)
class SubordinacyReport:
    lam: float
    k: int
    r0: float
    r_end: float
    delta: float
    ratio_tail: list  # (r, I_a / I_b)
    liminf_estimate: float
    classification: str
    fit: Optional[dict]
    census: Optional[CensusResult]

    def __post_init__(self):
        if any(v <= 0.0 for _, v in self.ratio_tail):
            raise ValueError("cumulative norm ratios must be positive")

    def to_dict(self):
        return {"kind": "subordinacy", "lambda": self.lam, "k": self.k,
                "r0": self.r0, "r_end": self.r_end, "delta": self.delta,
                "ratio_tail": self.ratio_tail,
                "liminf_estimate": self.liminf_estimate,
                "classification": self.classification, "fit": self.fit,
                "census": None if self.census is None else self.census.to_dict()}


def _fit_log_decay(r, logv):
    slope, intercept = np.polyfit(r, logv, 1)
    pred = slope * r + intercept
    ss_res = float(np.sum((logv - pred) ** 2))
    ss_tot = float(np.sum((logv - np.mean(logv)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept),
            "r_squared": r2}


def subordinacy_ratio(model: CoefficientModel, k: int, lam: float,
                      u0_a, u0_b, r0: float, r_end: float, *,
                      delta: float = 1e-3, n_ladder: int = 48,
                      rtol: float = 1e-10, atol: float = 1e-12,
                      with_census: bool = False) -> SubordinacyReport:
    """Cumulative squared-norm ratio of two solutions on a geometric ladder.

    Classification: `no-subordinate` when both orientations of the ratio
    stay above delta on the tail; `subordinate-found` when one orientation
    decays monotonically below delta and follows a clean log-linear decay
    law; `inconclusive` otherwise.
    """
    u0_a = np.asarray(u0_a, dtype=float)
    u0_b = np.asarray(u0_b, dtype=float)
    cross = u0_a[0] * u0_b[1] - u0_a[1] * u0_b[0]
    norms = float(np.hypot(*u0_a) * np.hypot(*u0_b))
    if abs(cross) < 1e-10 * norms:
        raise ValueError("initial conditions are numerically dependent")

    equal, _ = models_equal(model)
    use_transform = bool(equal and lam < 0.0)
    ladder = np.geomspace(max(r0 * 1.25, r0 + 1e-3 * (r_end - r0)), r_end,
                          n_ladder)

    if use_transform:
        tch = transform(model, k, lam)
        Lam = tch.Lambda

        # squared norm of u from the rescaled components:
        # |u|^2 = sqrt(Lambda/gamma) v1^2 + sqrt(gamma/Lambda) v2^2
        def weight(r):
            g = 2.0 * model.q._scalar(r) - lam
            w = math.sqrt(g / Lam)
            return 1.0 / w, w

        inits = []
        for u0 in (u0_a, u0_b):
            v1, v2 = tch.forward(r0, u0[0], u0[1])
            inits.append((math.atan2(v2, v1), 0.5 * math.log(v1 ** 2 + v2 ** 2)))
        sol = _pruefer_pair_with_weighted_norms(tch, inits, r0, r_end,
                                                ladder, rtol, atol, weight)
    else:
        channel = assemble_channel(model, k, lam)
        inits = [(math.atan2(u0[1], u0[0]), math.log(float(np.hypot(*u0))))
                 for u0 in (u0_a, u0_b)]
        sol = _pruefer_pair_with_weighted_norms(channel, inits, r0, r_end,
                                                ladder, rtol, atol, None)

    I_a, I_b = sol.y[2], sol.y[5]
    ratio_ab = I_a / I_b
    ratio_ba = I_b / I_a
    tail = sol.t >= r_end / 10.0
    liminf = float(np.min(ratio_ab[tail]))

    fit = None
    # decay-law window: past the midpoint, where transients have died out
    half = sol.t >= r0 + 0.5 * (r_end - r0)
    if float(np.min(ratio_ab[tail])) >= delta and \
            float(np.min(ratio_ba[tail])) >= delta:
        classification = "no-subordinate"
    else:
        cand = ratio_ab if np.min(ratio_ab[tail]) < delta else ratio_ba
        tail_vals = cand[half]
        monotone = bool(np.all(np.diff(tail_vals) <= np.abs(tail_vals[:-1]) * 1e-6))
        fit = _fit_log_decay(sol.t[half], np.log(tail_vals))
        if monotone and fit["slope"] < 0.0 and fit["r_squared"] > 0.99 \
                and tail_vals[-1] < delta:
            classification = "subordinate-found"
        else:
            classification = "inconclusive"

    census = None
    if with_census and use_transform:
        census = _census_for(model, k, lam, r0)

    return SubordinacyReport(
        lam=float(lam), k=int(k), r0=float(r0), r_end=float(r_end),
        delta=delta,
        ratio_tail=[(float(r), float(v)) for r, v in zip(sol.t, ratio_ab)],
        liminf_estimate=liminf, classification=classification, fit=fit,
        census=census)


def _pruefer_pair_with_weighted_norms(channel, inits, r0, r_end, ladder,
                                      rtol, atol, weight):
    """Integrate two solutions in polar form, carrying the cumulative
    (optionally component-weighted) squared norms as extra states."""
    qml = channel.scalar_qml

    def rhs(r, y):
        Q, M, L = qml(r)
        wa, wb = (1.0, 1.0) if weight is None else weight(r)
        out = []
        for base in (0, 3):
            th, lr = y[base], y[base + 1]
            c, s = math.cos(th), math.sin(th)
            s2, c2 = 2.0 * s * c, c * c - s * s
            wsq = wa * c * c + wb * s * s
            out.extend((Q + M * c2 + L * s2,
                        M * s2 - L * c2,
                        wsq * math.exp(2.0 * lr)))
        return out

    y0 = []
    for (th0, lr0) in inits:
        y0.extend((th0, lr0, 0.0))
    sol = solve_ivp(rhs, (r0, r_end), np.asarray(y0), method="DOP853",
                    rtol=rtol, atol=atol, t_eval=ladder)
    if sol.status != 0:
        raise PreconditionError(f"ratio integration failed: {sol.message}")
    return sol


def _census_for(model, k, lam, r0, n_max: int = 60):
    tch = transform(model, k, lam)
    # range long enough to cover n_max full turns at unit phase speed
    need = (n_max + 2) * math.pi

    def s_of(r):
        return quad(lambda x: tch.scalar_qml(x)[0], r0, r)[0]

    hi = r0 + 1.0
    while s_of(hi) < need and hi < 1e6:
        hi *= 1.6
    cfg = SolveConfig(r_start=r0, r_end=hi, rtol=1e-11, atol=1e-13,
                      stride=min(0.05, (hi - r0) / 4000.0))
    traj = integrate_pruefer(tch, 1.0, 0.0, cfg)
    traj = s_reparam(tch, traj)
    return theta_census(traj)


# ---------------------------------------------------------------------------
# eigenvalue shooting on the positive half-line


def decaying_direction(model: CoefficientModel, k: int, lam: float,
                       r_at: float) -> np.ndarray:
    """Unit vector along the locally decaying direction of the frozen
    system at r_at (positive spectral parameter, beyond the turning point).
    """
    S = 2.0 * lam * model.q.value(r_at) - lam ** 2 + (k / r_at) ** 2
    if S <= 0.0:
        raise PreconditionError(f"no decaying direction at r = {r_at:g}; "
                                f"still inside the oscillatory region")
    v = np.array([1.0, (k / r_at - math.sqrt(S)) / lam])
    return v / np.hypot(v[0], v[1])


def _turning_radius(model, lam, lo=1e-6, hi=1.0):
    # q is increasing toward infinity on these models; bisect q(r) = lam/2
    target = lam / 2.0
    while model.q.value(hi) < target:
        hi *= 2.0
        if hi > 1e9:
            raise PreconditionError("no turning radius found")
    if model.q.value(lo) >= target:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if model.q.value(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * (1.0 + hi):
            break
    return 0.5 * (lo + hi)


def _shoot_range(model, k, lam, r_star, exponent):
    # march until the semiclassical exponent past the turning point reaches
    # the requested budget
    total, r = 0.0, r_star
    step = max(r_star * 0.05, 0.01)
    while total < exponent:
        S = 2.0 * lam * model.q.value(r + step) - lam ** 2 + (k / (r + step)) ** 2
        if S > 0.0:
            total += math.sqrt(S) * step
        r += step
        if r > 1e6:
            break
    return r


def eigen_shoot(model: CoefficientModel, k: int, bracket, *,
                tol_lambda: float = 1e-8, scan_step: float = 0.05,
                rtol: float = 1e-10, atol: float = 1e-13,
                dominance: float = 1e3, match_radius_factor: float = 1.0,
                wkb_exponent: float = 27.0) -> list:
    """Locate discrete spectral points inside a positive bracket.

    The solution recessive at the origin is continued outward, the solution
    recessive at infinity is continued inward, and the normalized angle
    mismatch between them at the turning-point radius changes sign exactly
    at an eigenvalue; each sign change is refined by bisection.
    """
    equal, where = models_equal(model)
    if not equal:
        raise ValueError(f"eigenvalue shooting requires m == q; first "
                         f"mismatch near r = {where:g}")
    a, b = float(bracket[0]), float(bracket[1])
    if a < 0.0 or b <= a:
        raise ValueError("bracket must lie inside the positive half-line")

    def mismatch(lam):
        ch = assemble_channel(model, k, lam)
        init = frobenius_radius(ch, dominance_factor=dominance,
                                r_init=min(1e-3, 0.01 / (1.0 + lam)))
        r_star = _turning_radius(model, lam)
        r_match = max(r_star * match_radius_factor, 4.0 * init.r0)
        r_far = _shoot_range(model, k, lam, max(r_star, r_match), wkb_exponent)
        u_f = propagate(ch, init.u0, init.r0, r_match, rtol=rtol, atol=atol)
        u_b = propagate(ch, decaying_direction(model, k, lam, r_far),
                        r_far, r_match, rtol=rtol, atol=atol)
        num = u_f[0] * u_b[1] - u_f[1] * u_b[0]
        return float(num / (np.hypot(*u_f) * np.hypot(*u_b)))

    n = max(8, int(math.ceil((b - a) / scan_step)))
    grid = a + (b - a) * np.arange(1, n + 1) / n
    values = [mismatch(l) for l in grid]
    roots = []
    for (l1, f1), (l2, f2) in zip(zip(grid, values), zip(grid[1:], values[1:])):
        if f1 == 0.0:
            roots.append(float(l1))
            continue
        if f1 * f2 < 0.0:
            lo, fl = l1, f1
            hi = l2
            while hi - lo > tol_lambda:
                mid = 0.5 * (lo + hi)
                fm = mismatch(mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if fl * fm < 0.0:
                    hi = mid
                else:
                    lo, fl = mid, fm
            roots.append(float(0.5 * (lo + hi)))
    if values and values[-1] == 0.0:
        roots.append(float(grid[-1]))
    return sorted(roots)


# ---------------------------------------------------------------------------
# per-cell spectral classification


def classify_spectrum(model: CoefficientModel, k_set: Sequence[int],
                      lambda_grid: Sequence[float], *, seed: int = 0,
                      r_end: float = 120.0, delta: float = 1e-3,
                      rtol: float = 1e-9) -> dict:
    """Run the appropriate evidence pipeline for each (k, lambda) cell.

    Dominant-potential models go through the boundedness certificate;
    borderline (m == q) models go through the cumulative-ratio pipeline,
    with the sign of lambda selecting the expected behaviour.  Lambda = 0
    is excluded for borderline models (no claim is made at the boundary
    point).
    """
    equal, _ = models_equal(model)
    if equal:
        hyp = check_b_conditions(model)
    else:
        hyp = check_a_conditions(model, sorted(set(lambda_grid)))
    heuristic = worst_verdict(hyp) != SATISFIED

    cells = []
    for k in sorted(int(k) for k in set(k_set)):
        for j, lam in enumerate(sorted(set(float(l) for l in lambda_grid))):
            rng = np.random.default_rng([seed, k + 10 ** 6, j])
            cell = {"k": k, "lambda": lam, "heuristic": heuristic}
            try:
                if not equal:
                    cell.update(_dominant_cell(model, k, lam, r_end, rng, rtol))
                elif lam == 0.0:
                    cell.update({"classification": "excluded",
                                 "path": "boundary-point"})
                elif lam < 0.0:
                    cell.update(_ratio_cell(model, k, lam, r_end, delta, rtol))
                else:
                    cell.update(_eigen_side_cell(model, k, lam, delta, rtol))
            except Exception as err:  # per-cell isolation: scan must go on
                cell.update({"classification": "error", "path": "none",
                             "error": f"{type(err).__name__}: {err}"})
            cells.append(cell)
    summary = _summarize(cells)
    return {"kind": "scan", "model": model.to_dict(), "equal_coefficients":
            equal, "hypotheses": [h.to_dict() for h in hyp],
            "heuristic": heuristic, "cells": cells, "summary": summary}


def _dominant_cell(model, k, lam, r_end, rng, rtol):
    channel = assemble_channel(model, k, lam)
    reports = check_c_conditions(channel)
    if worst_verdict(reports) != SATISFIED:
        return {"path": "boundedness", "classification": "inconclusive",
                "channel_conditions": [r.to_dict() for r in reports]}
    r0 = auto_start_radius(channel)
    cert = comparability_constant(channel, r0, r_end, rng=rng)
    cls = "ac-candidate" if cert.verdict == "bounded" else "inconclusive"
    return {"path": "boundedness", "classification": cls,
            "certificate": cert.to_dict(),
            "channel_conditions": [r.to_dict() for r in reports]}


def _ratio_cell(model, k, lam, r_end, delta, rtol):
    report = subordinacy_ratio(model, k, lam, [1.0, 0.0], [0.0, 1.0],
                               1.0, r_end, delta=delta, rtol=rtol)
    cls = {"no-subordinate": "ac-candidate",
           "subordinate-found": "subordinate-found"}.get(
        report.classification, "inconclusive")
    return {"path": "subordinacy", "classification": cls,
            "report": report.to_dict()}


def _eigen_side_cell(model, k, lam, delta, rtol):
    r0 = 1.0
    r_star = _turning_radius(model, lam)
    r_far = _shoot_range(model, k, lam, max(r_star, r0 * 1.5), 15.0)
    u_dec = propagate(assemble_channel(model, k, lam),
                      decaying_direction(model, k, lam, r_far), r_far, r0,
                      rtol=1e-10, atol=1e-13)
    u_dec = u_dec / np.hypot(*u_dec)
    generic = np.array([-u_dec[1], u_dec[0]])
    report = subordinacy_ratio(model, k, lam, u_dec, generic, r0, r_far,
                               delta=delta, rtol=rtol)
    cls = {"subordinate-found": "subordinate-found",
           "no-subordinate": "ac-candidate"}.get(
        report.classification, "inconclusive")
    return {"path": "subordinacy", "classification": cls,
            "report": report.to_dict()}


def _summarize(cells):
    by_lam = {}
    for cell in cells:
        by_lam.setdefault(cell["lambda"], []).append(cell["classification"])
    ac = [lam for lam, cls in sorted(by_lam.items())
          if all(c == "ac-candidate" for c in cls)]
    return {"ac_candidate_lambdas": ac,
            "n_cells": len(cells),
            "n_errors": sum(1 for c in cells if c["classification"] == "error")}
