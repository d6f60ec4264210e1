"""Annulus levels c(R1,R2) = inf of J over the radial Nehari manifold.

Two independent methods:

* ``minimize_annulus`` — descent on nodal values.  Each step solves the
  lagged-stiffness tridiagonal system for the search direction (a
  preconditioned gradient step; plain gradient descent stalls badly on the
  stiff log grids used here), applies Armijo backtracking on the projected
  energy, takes absolute values (J(|u|) = J(u), so the minimizer can be
  chosen nonnegative), and rescales exactly back onto the Nehari manifold
  with the closed-form t*.  The Nehari radial direction is energy-neutral
  to first order at projected points, so the Armijo slope test remains
  valid through the projection.

* ``shoot_annulus`` — an ODE oracle sharing no machinery with the descent:
  integrate the radial equation from r = R1 in the flux formulation
  w = r^{N-1}|u'|^{p-2}u', locate the first zero of u, and root-find the
  initial flux so that zero lands on R2.  Energies come from adaptive
  quadrature of the dense ODE output, then an exact Nehari rescale.

The scaling law c(R1,R2) = c(R1/R2, 1) and the small-hole limit toward
c_infty are exercised by ``scaling_check`` and ``c_curve``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from . import radial_core as rc
from . import sobolev as sb
from .errors import DomainError, NumericError

LINE_SEARCHES = ("armijo",)
INITS = ("parabolic_bump", "custom")

#: Armijo sufficient-decrease fraction
ARMIJO_C1 = 1e-4
#: consecutive flat-energy steps required (with small residual) to stop
PLATEAU_STEPS = 5


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 2000
    energy_tol: float = 1e-10
    residual_tol: float = 1e-6
    line_search: str = "armijo"
    init: str = "parabolic_bump"
    init_values: np.ndarray | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if not (self.energy_tol > 0.0 and self.residual_tol > 0.0):
            raise DomainError("tolerances must be positive")
        if self.line_search not in LINE_SEARCHES:
            raise DomainError(f"line_search must be one of {LINE_SEARCHES}")
        if self.init not in INITS:
            raise DomainError(f"init must be one of {INITS}")
        if self.init == "custom" and self.init_values is None:
            raise DomainError("init='custom' requires init_values")


@dataclass(frozen=True)
class EnergyReport:
    """Solve outcome; the Nehari identity level = Q^{N/p}/N holds at 1e-10."""

    level: float
    Q: float
    iterations: int
    residual: float
    method: str
    converged: bool = True
    boundary_defect: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "level": self.level,
            "Q": self.Q,
            "iterations": self.iterations,
            "residual": self.residual,
            "method": self.method,
            "converged": self.converged,
            "boundary_defect": self.boundary_defect,
        }


# ---------------------------------------------------------------------------
# descent
# ---------------------------------------------------------------------------

def _nehari_values(values: np.ndarray, grid: rc.RadialGrid) -> tuple[np.ndarray, float]:
    """Rescale nodal values onto the Nehari manifold; return (values, raw level).

    Raw means the sphere-measure factor is omitted (it cancels in t* and
    rescales the level uniformly).
    """
    u = rc.RadialFunction(grid, values)
    A, B = rc._raw_terms(u)
    if A <= 0.0 or B <= 0.0:
        raise NumericError("iterate degenerated to zero during descent")
    t = (A / B) ** (1.0 / (grid.pstar - grid.exponent))
    p, ps = grid.exponent, grid.pstar
    level = (t ** p) * A / p - (t ** ps) * B / ps
    return t * values, level


def _raw_level(A: float, B: float, grid: rc.RadialGrid) -> float:
    """Raw Nehari level of a function with raw integrals (A, B)."""
    t = (A / B) ** (1.0 / (grid.pstar - grid.exponent))
    p, ps = grid.exponent, grid.pstar
    return (t ** p) * A / p - (t ** ps) * B / ps


def minimize_on_grid(grid: rc.RadialGrid, opts: SolveOptions | None = None
                     ) -> tuple[rc.RadialFunction, EnergyReport]:
    """Nehari descent on an existing grid (used directly by build_family)."""
    opts = opts or SolveOptions()
    nodes = grid.nodes
    if opts.init == "parabolic_bump":
        vals = (nodes - nodes[0]) * (nodes[-1] - nodes)
    else:
        vals = np.abs(np.asarray(opts.init_values, dtype=float))
        if vals.shape != nodes.shape:
            raise DomainError("init_values length does not match the grid")
    vals[0] = 0.0
    vals[-1] = 0.0
    vals, J = _nehari_values(vals, grid)

    plateau = 0
    resid = math.inf
    iters = 0
    converged = False
    for iters in range(1, opts.max_iters + 1):
        u = rc.RadialFunction(grid, vals)
        A, _, g = rc._raw_gradient(u)
        F = g[1:-1]
        kappa = rc._cell_kappa(vals, grid)
        d = rc._interior_solve(kappa, F)
        resid = math.sqrt(max(float(F @ d), 0.0) / A)
        if resid <= opts.residual_tol and plateau >= PLATEAU_STEPS:
            converged = True
            break

        slope = -float(F @ d)  # directional derivative along -K^{-1} g
        step = 1.0
        accepted = None
        for _ in range(40):
            cand = vals.copy()
            cand[1:-1] = np.abs(vals[1:-1] - step * d)
            try:
                cand, J_cand = _nehari_values(cand, grid)
            except NumericError:
                step *= 0.5
                continue
            if J_cand <= J + ARMIJO_C1 * step * slope or J_cand < J:
                accepted = (cand, J_cand)
                break
            step *= 0.5
        if accepted is None:
            # direction exhausted: either converged to rounding level or stuck
            converged = resid <= opts.residual_tol
            break
        vals, J_new = accepted
        if abs(J_new - J) <= opts.energy_tol * abs(J):
            plateau += 1
        else:
            plateau = 0
        J = J_new

    u = rc.RadialFunction(grid, vals)
    level = grid.measure * J
    Q = rc.rayleigh_Q(u)
    report = EnergyReport(level=level, Q=Q, iterations=iters,
                          residual=resid, method="descent", converged=converged)
    return u, report


def minimize_annulus(spec: rc.AnnulusSpec, M: int, opts: SolveOptions | None = None
                     ) -> tuple[rc.RadialFunction, EnergyReport]:
    """Minimize J over the discrete radial Nehari manifold of the annulus.

    The minimizer is nonnegative, lies on the discrete Nehari manifold, and
    the accepted-step energies decrease monotonically.  Non-convergence
    within max_iters is flagged on the report, not raised.
    """
    if M < 8:
        raise DomainError(f"minimize_annulus needs M >= 8, got {M}")
    grid = rc.make_grid(spec, M, "logarithmic")
    return minimize_on_grid(grid, opts)


# ---------------------------------------------------------------------------
# shooting oracle
# ---------------------------------------------------------------------------

def _shoot_rhs(N: int, p: float, ps: float):
    e = 1.0 / (p - 1.0)

    def rhs(r, y):
        u, w = y
        q = w / r ** (N - 1)
        du = math.copysign(abs(q) ** e, q)
        dw = -(r ** (N - 1)) * abs(u) ** (ps - 1.0) * math.copysign(1.0, u) \
            if u != 0.0 else 0.0
        return (du, dw)

    return rhs


def _first_zero(w0: float, spec: rc.AnnulusSpec, r_max: float, rtol: float,
                atol: float, dense: bool = False):
    """Integrate from (u, w) = (0, w0) at R1; return (zero radius or None, sol)."""
    rhs = _shoot_rhs(spec.dim, spec.exponent, spec.pstar)

    def down_crossing(r, y):
        return y[0]

    down_crossing.terminal = True
    down_crossing.direction = -1.0
    sol = solve_ivp(rhs, (spec.R1, r_max), (0.0, w0), method="RK45",
                    rtol=rtol, atol=atol, dense_output=dense,
                    events=down_crossing)
    if sol.t_events[0].size:
        return float(sol.t_events[0][0]), sol
    return None, sol


def shoot_annulus(spec: rc.AnnulusSpec, opts: SolveOptions | None = None,
                  M_out: int = 2048, rtol: float = 1e-11, atol: float = 1e-14
                  ) -> tuple[rc.RadialFunction, EnergyReport]:
    """Independent ODE oracle for the annulus level.

    Root-finds the initial flux w0 = r^{N-1}|u'|^{p-2}u' at R1 so that the
    first zero of u lands on R2; the solution is positive inside.  The
    returned profile is the dense ODE solution sampled to a log grid with
    M_out cells and rescaled onto the discrete Nehari manifold; the report
    carries the continuum level from adaptive quadrature of the dense output.
    """
    opts = opts or SolveOptions()
    r_max = 3.0 * spec.R2
    evals = 0

    def rho_defect(logw):
        nonlocal evals
        evals += 1
        zero, _ = _first_zero(math.exp(logw), spec, r_max, rtol, atol)
        # no zero before r_max means the bump is too shallow: treat as "past R2"
        return (zero if zero is not None else r_max) - spec.R2

    # rho(w0) decreases in w0: scan a geometric ladder for a sign change
    lo = hi = 0.0
    flo = fhi = rho_defect(0.0)
    tries = 0
    while flo * fhi >= 0.0:
        tries += 1
        if tries > 60:
            raise NumericError(
                "shooting bracket failed for %r: defect(%g)=%g, defect(%g)=%g"
                % (spec, math.exp(lo), flo, math.exp(hi), fhi)
            )
        if flo > 0.0:  # zero past R2 at the small end too: push amplitudes up
            hi += math.log(4.0)
            fhi = rho_defect(hi)
            if fhi < 0.0:
                break
            lo, flo = hi, fhi
        else:
            lo -= math.log(4.0)
            flo = rho_defect(lo)
            if flo > 0.0:
                break
            hi, fhi = lo, flo
    if lo > hi:
        lo, hi = hi, lo
    logw = brentq(rho_defect, lo, hi, xtol=1e-14, rtol=8.9e-16)
    w0 = math.exp(logw)

    zero, sol = _first_zero(w0, spec, r_max, rtol, atol, dense=True)
    if zero is None:
        raise NumericError(f"shooting lost the zero after root-find for {spec!r}")
    dense = sol.sol

    N, p, ps = spec.dim, spec.exponent, spec.pstar
    om = rc.sphere_measure(N)

    def u_of(r):
        return dense(r)[0]

    def du_of(r):
        q = dense(r)[1] / r ** (N - 1)
        return math.copysign(abs(q) ** (1.0 / (p - 1.0)), q)

    top = min(zero, spec.R2)
    A = om * quad(lambda r: abs(du_of(r)) ** p * r ** (N - 1),
                  spec.R1, top, limit=200, epsabs=0.0, epsrel=1e-10)[0]
    B = om * quad(lambda r: abs(u_of(r)) ** ps * r ** (N - 1),
                  spec.R1, top, limit=200, epsabs=0.0, epsrel=1e-10)[0]
    Q = A / B ** (p / ps)
    level = Q ** (N / p) / N

    # sample the dense solution; refine until the discrete residual meets the
    # tolerance (for p > 2 the peak has unbounded u'' and consistency is
    # slower than O(h^2), so the required grid can be much finer than M_out)
    M_cap = max(M_out, 1 << 18)
    M_cur = M_out
    while True:
        grid = rc.make_grid(spec, M_cur, "logarithmic")
        vals = np.maximum(dense(np.clip(grid.nodes, spec.R1, top))[0], 0.0)
        u_peak = float(np.max(vals))
        boundary_defect = abs(u_of(top)) / u_peak if u_peak > 0 else math.inf
        vals[0] = 0.0
        vals[-1] = 0.0
        vals, _ = _nehari_values(vals, grid)
        u = rc.RadialFunction(grid, vals)
        residual = rc.ode_residual(u)
        if residual <= opts.residual_tol:
            break
        if M_cur >= M_cap:
            raise NumericError(
                "shooting profile residual %.3e exceeds tolerance %.0e for %r "
                "even at M_out=%d" % (residual, opts.residual_tol, spec, M_cur)
            )
        M_cur *= 2
    report = EnergyReport(level=level, Q=Q, iterations=evals, residual=residual,
                          method="shooting", converged=True,
                          boundary_defect=boundary_defect)
    return u, report


# ---------------------------------------------------------------------------
# scaling law and level curve
# ---------------------------------------------------------------------------

def scaling_check(spec: rc.AnnulusSpec, M: int, opts: SolveOptions | None = None) -> float:
    """|c(R1,R2) - c(R1/R2, 1)| / c(R1/R2, 1) on matched log grids."""
    _, rep = minimize_annulus(spec, M, opts)
    unit = rc.AnnulusSpec(spec.ratio, 1.0, spec.dim, spec.exponent)
    _, rep_unit = minimize_annulus(unit, M, opts)
    return abs(rep.level - rep_unit.level) / rep_unit.level


def c_curve(N: int, p: float, radii, M: int = 2048,
            opts: SolveOptions | None = None, c_infty: float | None = None
            ) -> list[tuple[float, float, float]]:
    """Rows (R, c(R,1), c(R,1) - c_infty), sorted by R descending."""
    radii = [float(R) for R in radii]
    if any(not (0.0 < R < 1.0) for R in radii):
        raise DomainError(f"all hole ratios must lie in (0,1), got {radii}")
    if c_infty is None:
        c_infty = sb.cached_quantum(N, p)
    rows = []
    for R in sorted(radii, reverse=True):
        _, rep = minimize_annulus(rc.AnnulusSpec(R, 1.0, N, p), M, opts)
        rows.append((R, rep.level, rep.level - c_infty))
    return rows
