"""Oscillatory reference solutions for the borderline regime at negative
spectral parameters, and defect measures tying the solved system back to
its associated second-order equation.

The reference pair has components

    ( q^(-1/4) cos(Phi),  sqrt(2/|lambda|) q^(1/4) sin(Phi) )
    ( q^(-1/4) sin(Phi), -sqrt(2/|lambda|) q^(1/4) cos(Phi) )

with phase Phi(r) = int_1^r sqrt(lambda^2 - 2 lambda q).  Numeric solutions
are compared against the span of the pair by windowed least squares; the
projection residual is scale-invariant and insensitive to the reference
phase origin, and its decay along the radius quantifies how fast the
asymptotic regime is reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson

from .coefficients import CoefficientModel, assemble_channel, models_equal
from .solver import SolveConfig, Trajectory, integrate_pruefer
from .subordinacy import transform

__all__ = [
    "WkbReference",
    "wkb_reference",
    "compare_asymptotics",
    "second_order_check",
    "first_order_check",
    "defect_convergence",
    "borderline_trajectory",
]


@dataclass(frozen=True)
class WkbReference:
    lam: float
    grid: np.ndarray
    phase: np.ndarray
    col_cos: np.ndarray  # shape (2, n)
    col_sin: np.ndarray  # shape (2, n)

    def __post_init__(self):
        if np.any(np.diff(self.phase) <= 0.0):
            raise ValueError("reference phase must be strictly increasing")


def wkb_reference(model: CoefficientModel, lam: float, r_grid,
                  refine: int = 4) -> WkbReference:
    """Tabulate the reference pair on a grid; the phase integral runs by
    refined cumulative quadrature from the first grid point."""
    if lam >= 0.0:
        raise ValueError("the reference pair exists for negative spectral "
                         "parameters only")
    grid = np.asarray(r_grid, dtype=float)
    q = model.q.value(grid)
    if np.any(q <= 0.0):
        raise ValueError("potential must be positive on the grid")
    offs = np.arange(refine) / refine
    rr = np.append((grid[:-1, None] + np.diff(grid)[:, None] * offs).ravel(),
                   grid[-1])
    omega = np.sqrt(lam ** 2 - 2.0 * lam * model.q.value(rr))
    phase = cumulative_simpson(omega, x=rr, initial=0.0)[::refine]
    amp1 = q ** -0.25
    amp2 = math.sqrt(2.0 / -lam) * q ** 0.25
    col_cos = np.vstack([amp1 * np.cos(phase), amp2 * np.sin(phase)])
    col_sin = np.vstack([amp1 * np.sin(phase), -amp2 * np.cos(phase)])
    return WkbReference(lam=float(lam), grid=grid, phase=phase,
                        col_cos=col_cos, col_sin=col_sin)


def compare_asymptotics(traj: Trajectory, ref: WkbReference,
                        windows: Optional[Sequence] = None,
                        n_windows: int = 6, cond_limit: float = 1e12):
    """Relative least-squares projection residual of the numeric components
    onto the span of the reference pair, per window.

    Returns a list of dicts (window, center, residual); windows whose
    reference columns are numerically dependent are skipped.
    """
    if not np.array_equal(traj.grid, ref.grid):
        raise ValueError("trajectory and reference must share a grid")
    grid = traj.grid
    if windows is None:
        edges = np.geomspace(grid[0], grid[-1], n_windows + 1)
        windows = list(zip(edges[:-1], edges[1:]))
    out = []
    for a, b in windows:
        sel = (grid >= a) & (grid <= b)
        if np.count_nonzero(sel) < 8:
            continue
        A = np.column_stack([
            np.concatenate([ref.col_cos[0][sel], ref.col_cos[1][sel]]),
            np.concatenate([ref.col_sin[0][sel], ref.col_sin[1][sel]])])
        rhs = np.concatenate([traj.u1[sel], traj.u2[sel]])
        norm = float(np.linalg.norm(rhs))
        if norm == 0.0:
            out.append({"window": (float(a), float(b)),
                        "center": float(math.sqrt(a * b)), "residual": 0.0})
            continue
        sv = np.linalg.svd(A, compute_uv=False)
        if sv[0] <= 0.0 or sv[0] / max(sv[-1], 1e-300) > cond_limit:
            continue
        coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        residual = float(np.linalg.norm(rhs - A @ coef) / norm)
        out.append({"window": (float(a), float(b)),
                    "center": float(math.sqrt(a * b)), "residual": residual})
    return out


def borderline_trajectory(model: CoefficientModel, k: int, lam: float,
                          cfg: SolveConfig) -> Trajectory:
    """Solve the borderline channel for lam < 0 through the rescaled polar
    form and map back to the original components."""
    tch = transform(model, k, lam)
    vtraj = integrate_pruefer(tch, 1.0, 0.0, cfg)
    u1, u2 = tch.inverse(vtraj.grid, vtraj.u1, vtraj.u2)
    return Trajectory(grid=vtraj.grid, u1=u1, u2=u2, rho=np.hypot(u1, u2),
                      theta=None, mode="transformed",
                      channel=assemble_channel(model, k, lam),
                      accepted_r=vtraj.accepted_r,
                      accepted_theta=vtraj.accepted_theta,
                      status=vtraj.status, message=vtraj.message,
                      nfev=vtraj.nfev)


def _uniform_stride(grid):
    d = np.diff(grid)
    h = float(d[0])
    if not np.allclose(d, h, rtol=1e-8):
        raise ValueError("defect measures need a uniform grid stride")
    return h


def second_order_check(traj: Trajectory, model: CoefficientModel, k: int,
                       lam: float) -> dict:
    """Scaled defect of -u1'' + 2 lambda q u1 + k(k+1)/r^2 u1 - lambda^2 u1
    with u1'' by centered differences; the defect vanishes at second order
    in the stride."""
    equal, where = models_equal(model)
    if not equal:
        raise ValueError(f"second-order reduction requires m == q; first "
                         f"mismatch near r = {where:g}")
    h = _uniform_stride(traj.grid)
    r = traj.grid[1:-1]
    u1 = traj.u1
    d2 = (u1[2:] - 2.0 * u1[1:-1] + u1[:-2]) / h ** 2
    q = model.q.value(r)
    mid = u1[1:-1]
    defect = -d2 + 2.0 * lam * q * mid + k * (k + 1) / r ** 2 * mid \
        - lam ** 2 * mid
    scale = float(np.max(np.abs(lam ** 2 * mid) + np.abs(2.0 * lam * q * mid)))
    if scale == 0.0:
        return {"max_defect": 0.0, "stride": h}
    return {"max_defect": float(np.max(np.abs(defect)) / scale), "stride": h}


def first_order_check(traj: Trajectory, model: CoefficientModel, k: int,
                      lam: float) -> dict:
    """Scaled defect of u1' + (k/r) u1 - lambda u2 with u1' by centered
    differences."""
    h = _uniform_stride(traj.grid)
    r = traj.grid[1:-1]
    d1 = (traj.u1[2:] - traj.u1[:-2]) / (2.0 * h)
    mid1, mid2 = traj.u1[1:-1], traj.u2[1:-1]
    defect = d1 + (k / r) * mid1 - lam * mid2
    scale = float(np.max(np.abs(lam * mid2) + np.abs(k / r * mid1)))
    if scale == 0.0:
        return {"max_defect": 0.0, "stride": h}
    return {"max_defect": float(np.max(np.abs(defect)) / scale), "stride": h}


def defect_convergence(model: CoefficientModel, k: int, lam: float,
                       r_lo: float, r_hi: float, strides=(0.04, 0.02, 0.01),
                       rtol: float = 1e-11, atol: float = 1e-13) -> dict:
    """Second-order defect across a ladder of stride halvings; the observed
    convergence orders should sit near 2."""
    defects = []
    for h in strides:
        cfg = SolveConfig(r_start=r_lo, r_end=r_hi, rtol=rtol, atol=atol,
                          stride=h)
        traj = borderline_trajectory(model, k, lam, cfg)
        defects.append(second_order_check(traj, model, k, lam)["max_defect"])
    orders = [math.log2(a / b) for a, b in zip(defects, defects[1:])]
    return {"strides": list(strides), "defects": defects, "orders": orders}
