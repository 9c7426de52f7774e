"""Boundedness certificates built from the channel's envelope function.

For a solution u of the channel system the scalar

    R = ((u1^2 + u2^2) Q + (u1^2 - u2^2) M + 2 u1 u2 L) / (Q - W)

dominates |u|^2 and is almost monotone: its growth between two radii is
bounded by the variation of the coefficient quotients times its running
supremum.  When those variations have small tails, R (and hence every
solution) stays bounded, and a two-sided comparability constant links the
size of any solution at any radius back to its initial size.

Special forms exist when one coefficient vanishes identically:

    M == 0:  R = u1^2 + u2^2 + L/(Q - L) (u1 + u2)^2
    L == 0:  R = u1^2 + u2^2 + 2M/(Q - M) u1^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bvcalc import cumulative_variation
from .hypotheses import VIOLATED, HypothesisReport
from .solver import (
    PreconditionError,
    SolveConfig,
    Trajectory,
    integrate_fundamental,
)

__all__ = [
    "RTrace",
    "BoundednessCertificate",
    "r_eval",
    "completed_square",
    "envelope_form",
    "r_trace",
    "almost_monotone_check",
    "comparability_constant",
    "auto_start_radius",
]

GENERAL = "general"
M_ZERO = "M_zero"
L_ZERO = "L_zero"


def envelope_form(channel, r_probe) -> str:
    """Pick the envelope form from coefficients that vanish identically."""
    _, M, L, _ = channel.coeffs(np.asarray(r_probe, dtype=float))
    if np.all(M == 0.0):
        return M_ZERO
    if np.all(L == 0.0):
        return L_ZERO
    return GENERAL


def r_eval(u, coeffs, form: str = GENERAL):
    """Envelope value for a state u = (u1, u2) given (Q, M, L, W) at the
    same radius; vectorized over samples."""
    u1, u2 = u
    Q, M, L, W = coeffs
    usq = u1 ** 2 + u2 ** 2
    if form == GENERAL:
        den = Q - W
        _require_positive(den, "Q - W")
        return (usq * Q + (u1 ** 2 - u2 ** 2) * M + 2.0 * u1 * u2 * L) / den
    if form == M_ZERO:
        den = Q - L
        _require_positive(den, "Q - L")
        return usq + L / den * (u1 + u2) ** 2
    if form == L_ZERO:
        den = Q - M
        _require_positive(den, "Q - M")
        return usq + 2.0 * M / den * u1 ** 2
    raise ValueError(f"unknown envelope form {form!r}")


def _require_positive(den, label):
    arr = np.asarray(den)
    if np.any(arr <= 0.0):
        raise PreconditionError(f"{label} must be positive where the envelope "
                                f"is evaluated")


def completed_square(u, coeffs):
    """Alternative evaluation of the general envelope:
    |u|^2 + (sqrt(W+M) u1 + sgn(L) sqrt(W-M) u2)^2 / (Q - W)."""
    u1, u2 = u
    Q, M, L, W = coeffs
    _require_positive(Q - W, "Q - W")
    cross = np.sqrt(W + M) * u1 + np.sign(L) * np.sqrt(np.maximum(W - M, 0.0)) * u2
    return u1 ** 2 + u2 ** 2 + cross ** 2 / (Q - W)


@dataclass
class RTrace:
    """Envelope values along a trajectory plus the quotient data feeding the
    almost-monotone bound."""

    grid: np.ndarray
    R: np.ndarray
    usq: np.ndarray
    form: str
    quotient_cumvar: dict  # name -> prefix sums of |increments|
    epsilon: float  # sup |L|/Q on the grid (used by the M == 0 variant)

    def to_csv(self, path, bound: Optional[np.ndarray] = None):
        bound = self.R if bound is None else bound
        with open(path, "w") as fh:
            fh.write("# kind=rtrace\n")
            fh.write("r,R,usq,bound\n")
            for row in zip(self.grid, self.R, self.usq, bound):
                fh.write(",".join(repr(float(x)) for x in row) + "\n")


def r_trace(traj: Trajectory, form: Optional[str] = None) -> RTrace:
    channel = traj.channel
    coeffs = channel.coeffs(traj.grid)
    if form is None:
        form = envelope_form(channel, traj.grid)
    R = r_eval((traj.u1, traj.u2), coeffs, form)
    Q, M, L, W = coeffs
    if form == M_ZERO:
        quotients = {"L/(Q-L)": L / (Q - L)}
    elif form == L_ZERO:
        quotients = {"W/(Q-W)": W / (Q - W), "M/(Q-W)": M / (Q - W)}
    else:
        quotients = {"W/(Q-W)": W / (Q - W), "M/(Q-W)": M / (Q - W),
                     "L/(Q-W)": L / (Q - W)}
    cumvar = {name: cumulative_variation(vals) for name, vals in quotients.items()}
    eps = float(np.max(np.abs(L) / Q))
    return RTrace(grid=traj.grid, R=np.asarray(R), usq=traj.norm_sq(),
                  form=form, quotient_cumvar=cumvar, epsilon=eps)


@dataclass(frozen=True)
class PairVerdict:
    t1: float
    t2: float
    lhs: float
    rhs: float
    ok: bool


def almost_monotone_check(traj: Trajectory, pairs=None, n_grid: int = 32,
                          form: Optional[str] = None, rel_tol: float = 1e-9):
    """Check R(t2) - R(t1) <= (sum of quotient variations) * sup R over
    [t1, t2] for pairs along the trajectory.

    For M == 0 channels the single-quotient variant with the factor
    2 (1 + eps)/(1 - eps) is used.  A false verdict is a finding, not an
    error.
    """
    trace = r_trace(traj, form)
    grid = trace.grid
    if pairs is None:
        pts = np.geomspace(grid[0], grid[-1], n_grid)
        idx = sorted(set(int(i) for i in np.searchsorted(grid, pts)))
        idx = [min(i, len(grid) - 1) for i in idx]
    else:
        idx = sorted(set(int(np.argmin(np.abs(grid - t))) for t in pairs))
    if trace.form == M_ZERO:
        eps = trace.epsilon
        factor = 2.0 * (1.0 + eps) / (1.0 - eps) if eps < 1.0 else math.inf
    else:
        factor = 1.0
    # running maximum of R for sup over [t1, t2] via prefix maxima per pair
    results = []
    R = trace.R
    tol_scale = rel_tol * float(np.max(np.abs(R)))
    for a_pos, i in enumerate(idx):
        for j in idx[a_pos + 1:]:
            var_sum = sum(float(cv[j] - cv[i])
                          for cv in trace.quotient_cumvar.values())
            sup_R = float(np.max(R[i:j + 1]))
            lhs = float(R[j] - R[i])
            rhs = factor * var_sum * sup_R
            results.append(PairVerdict(t1=float(grid[i]), t2=float(grid[j]),
                                       lhs=lhs, rhs=rhs,
                                       ok=bool(lhs <= rhs + tol_scale)))
    return results


@dataclass(frozen=True)
class BoundednessCertificate:
    r0: float
    r_end: float
    sup_R: float
    C: float
    verdict: str
    spot_checks_ok: bool
    n_random: int

    def __post_init__(self):
        if self.C < 1.0:
            raise ValueError("comparability constant must be >= 1")

    def to_dict(self):
        return {"kind": "boundedness_certificate", "r0": self.r0,
                "r_end": self.r_end, "sup_R": self.sup_R, "C": self.C,
                "verdict": self.verdict, "spot_checks_ok": self.spot_checks_ok,
                "n_random": self.n_random}


def auto_start_radius(channel, margin: float = 0.05, lo: float = 0.5,
                      hi: float = 50.0) -> float:
    """First probe radius past which Q - W stays above margin * Q."""
    rs = np.geomspace(lo, hi, 400)
    Q, _, _, W = channel.coeffs(rs)
    good = (Q > 0.0) & (Q - W >= margin * Q)
    for i in range(len(rs)):
        if np.all(good[i:]):
            return float(rs[i])
    raise PreconditionError("Q - W does not stabilize above the margin on "
                            "the probe range")


def comparability_constant(channel, r0: float, r_end: float,
                           cfg: Optional[SolveConfig] = None,
                           reports: Optional[Sequence[HypothesisReport]] = None,
                           n_random: int = 8, rng=None,
                           safety: float = 1.02) -> BoundednessCertificate:
    """Certify |y(r0)|^2 / C <= |y(r)|^2 <= C |y(r0)|^2 on [r0, r_end].

    Solves a fundamental system once and takes C from the extreme norm
    ratios over both basis solutions, then spot-checks random unit-norm
    initial directions built by superposition.  Refused when the supplied
    hypothesis reports mark the envelope conditions C2/C3 violated.
    """
    if reports is not None:
        for rep in reports:
            if rep.condition_id.startswith(("C2", "C3")) and rep.verdict == VIOLATED:
                raise PreconditionError(
                    f"certificate refused: {rep.condition_id} reported violated")
    if cfg is None:
        cfg = SolveConfig(r_start=r0, r_end=r_end, rtol=1e-10, atol=1e-12)
    ta, tb = integrate_fundamental(channel, cfg)
    if not (ta.ok and tb.ok):
        raise PreconditionError(f"fundamental solve failed: {ta.message}")
    trace = r_trace(ta)
    sup_R = float(np.max(trace.R))

    def ratio_extremes(u1, u2):
        nsq = u1 ** 2 + u2 ** 2
        n0 = nsq[0]
        return float(np.max(nsq) / n0), float(n0 / np.min(nsq))

    cands = []
    for t in (ta, tb):
        up, down = ratio_extremes(t.u1, t.u2)
        cands.append(max(up, down))
    C = max(cands) * safety

    rng = np.random.default_rng(0) if rng is None else rng
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n_random)
    spot_ok = True
    for phi in angles:
        ca, sa = math.cos(phi), math.sin(phi)
        u1 = ca * ta.u1 + sa * tb.u1
        u2 = ca * ta.u2 + sa * tb.u2
        up, down = ratio_extremes(u1, u2)
        bound = max(up, down)
        if bound > 2.0 * C:
            spot_ok = False
        C = max(C, bound)
    return BoundednessCertificate(r0=float(r0), r_end=float(r_end),
                                  sup_R=sup_R, C=float(C),
                                  verdict="bounded" if spot_ok else "suspect",
                                  spot_checks_ok=spot_ok, n_random=n_random)
