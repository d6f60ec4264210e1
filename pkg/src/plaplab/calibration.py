"""Equal-energy radial families on geometric radius partitions, the
alternating sign-changing candidate, span energy bounds, and the
solvability thresholds l0.

The m sub-annuli of a geometric partition are mutual dilates (constant
ratio C = (R1/R2)^{1/m}), so their Nehari levels coincide; building every
sub-solve on slices of one global log grid makes the dilation exact at the
discrete level and makes extension-by-zero and disjoint-support additivity
exact as well — the pairwise level deviations are solver noise, not
discretization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import annulus as an
from . import radial_core as rc
from . import sobolev as sb
from .errors import DomainError, InconclusiveError, NonConvergenceError, NumericError

#: pairwise relative level deviation allowed inside one family
FAMILY_LEVEL_TOL = 1e-6

#: smallest hole ratio the threshold bisection will certify at
THRESHOLD_FLOOR = 1e-3


@dataclass(frozen=True)
class CalibratedFamily:
    """Disjointly supported Nehari minimizers with a common energy level.

    radii are descending, R2 = radii[0] > ... > radii[m] = R1; omega i
    (1-based, as in the geometric construction) is supported on
    [radii[i], radii[i-1]] and lives on the full-annulus grid.
    """

    spec: rc.AnnulusSpec
    radii: np.ndarray
    omegas: tuple[rc.RadialFunction, ...]
    common_level: float
    grid: rc.RadialGrid
    reports: tuple[an.EnergyReport, ...]

    @property
    def m(self) -> int:
        return len(self.omegas)

    @property
    def ratio(self) -> float:
        """The constant sub-annulus ratio C = (R1/R2)^{1/m}."""
        return (self.spec.R1 / self.spec.R2) ** (1.0 / self.m)


def partition_radii(R1: float, R2: float, m: int) -> np.ndarray:
    """Geometric partition R2 = r_0 > r_1 > ... > r_m = R1 with constant
    ratio C = (R1/R2)^{1/m}; endpoints exact."""
    if not (0.0 < R1 < R2):
        raise DomainError(f"need 0 < R1 < R2, got ({R1}, {R2})")
    if int(m) != m or m < 1:
        raise DomainError(f"partition count m must be an integer >= 1, got {m}")
    radii = R2 * (R1 / R2) ** (np.arange(m + 1) / m)
    radii[0] = R2
    radii[-1] = R1
    return radii


def build_family(spec: rc.AnnulusSpec, m: int, M: int,
                 opts: an.SolveOptions | None = None) -> CalibratedFamily:
    """Solve the m sub-annuli of the geometric partition on one global grid.

    M is the total cell count of the global log grid (rounded up to a
    multiple of m so the partition radii are grid nodes exactly).
    """
    if int(m) != m or m < 1:
        raise DomainError(f"m must be an integer >= 1, got {m}")
    per = max(8, -(-M // m))  # cells per sub-annulus, at least the solver minimum
    grid = rc.make_grid(spec, per * m, "logarithmic")
    radii = grid.nodes[::-per].copy()  # descending: R2, r_1, ..., R1

    omegas = []
    reports = []
    for i in range(1, m + 1):
        k_lo = (m - i) * per
        sub = rc.RadialGrid(grid.nodes[k_lo:k_lo + per + 1], spec.dim,
                            spec.exponent, "logarithmic")
        u, rep = an.minimize_on_grid(sub, opts)
        if not rep.converged:
            raise NonConvergenceError(
                f"sub-annulus {i}/{m} on [{sub.nodes[0]:g}, {sub.nodes[-1]:g}] "
                f"did not converge (residual {rep.residual:.3e}); family rejected"
            )
        omegas.append(rc.extend_by_zero(u, grid))
        reports.append(rep)

    levels = np.array([rep.level for rep in reports])
    common = float(levels[0])
    spread = float(np.max(np.abs(levels - common))) / common
    if spread > FAMILY_LEVEL_TOL:
        raise NumericError(
            f"family levels disagree by {spread:.3e} relative "
            f"(> {FAMILY_LEVEL_TOL:.0e}); levels: {levels.tolist()}"
        )
    return CalibratedFamily(spec=spec, radii=radii, omegas=tuple(omegas),
                            common_level=common, grid=grid, reports=tuple(reports))


def sign_changing_candidate(family: CalibratedFamily) -> rc.RadialFunction:
    """The alternating sum sum_i (-1)^i omega_i; J = m * common_level by
    disjoint supports.  An upper-bound test function, not a solution."""
    vals = np.zeros_like(family.grid.nodes)
    for i, om in enumerate(family.omegas, start=1):
        vals += (-1.0) ** i * om.values
    return rc.RadialFunction(family.grid, vals, dirichlet=True)


def sample_span_max(family: CalibratedFamily, k: int, samples: int = 10_000,
                    seed: int = 0, coeff_range: float = 3.0) -> float:
    """Max of J over random elements of span(omega_1..omega_{k+1})."""
    if not 1 <= k <= family.m - 1:
        raise DomainError(f"need 1 <= k <= m-1 = {family.m - 1}, got k={k}")
    rng = np.random.default_rng(seed)
    V = np.stack([om.values for om in family.omegas[:k + 1]])
    g = family.grid
    om_meas, p, ps = g.measure, g.exponent, g.pstar
    best = -math.inf
    chunk = 512
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        C = rng.uniform(-coeff_range, coeff_range, size=(n, k + 1))
        U = C @ V
        S = np.diff(U, axis=1) / g.h
        A = np.abs(S) ** p @ g.cell_weights
        B = np.abs(U) ** ps @ g.node_weights
        J = om_meas * (A / p - B / ps)
        best = max(best, float(np.max(J)))
        done += n
    return best


def span_energy_bound(family: CalibratedFamily, k: int, samples: int = 10_000,
                      seed: int = 0) -> float:
    """(k+1) * common_level = sum_{i<=k+1} max_t J(t omega_i).

    Disjoint supports make the bound a per-component maximization; a random
    sampling sweep over the span double-checks that nothing exceeds it.
    """
    bound = (k + 1) * family.common_level
    sampled = sample_span_max(family, k, samples, seed)
    if sampled > bound + 1e-12:
        raise NumericError(
            f"span sample J={sampled!r} exceeds the bound {bound!r}; "
            "disjoint-support additivity is broken"
        )
    return bound


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------

def _level(R: float, N: int, p: float, M: int, opts) -> float:
    _, rep = an.minimize_annulus(rc.AnnulusSpec(R, 1.0, N, p), M, opts)
    if not rep.converged:
        raise NonConvergenceError(f"level solve at R={R} did not converge")
    return rep.level

def threshold_small_hole(delta: float, N: int, p: float, M: int = 2048,
                         opts: an.SolveOptions | None = None,
                         rel_width: float = 0.05) -> float:
    """Largest certified hole ratio R with c(R,1) <= c_infty + delta.

    Log-bisection between a floor ratio and 0.9; returns the largest tested
    R satisfying the condition, located to a relative log-width rel_width.
    Raises InconclusiveError when delta is below what the grid can certify
    or when even the floor ratio fails the condition.
    """
    if not delta > 0.0:
        raise DomainError(f"delta must be positive, got {delta}")
    c_inf = sb.cached_quantum(N, p)
    # combined tolerance of the level solves and the c_infty estimate
    certify_tol = 2e-3 * c_inf
    if delta <= certify_tol:
        raise InconclusiveError(
            f"delta={delta:g} is below the certification tolerance "
            f"{certify_tol:g} at this resolution"
        )
    target = c_inf + delta
    hi = 0.9
    if _level(hi, N, p, M, opts) <= target:
        return hi
    lo = THRESHOLD_FLOOR
    if _level(lo, N, p, M, opts) > target:
        raise InconclusiveError(
            f"even at the floor ratio R={lo:g} the level exceeds "
            f"c_infty + delta = {target:g}; cannot certify any threshold"
        )
    # invariant: condition holds at lo, fails at hi
    while math.log(hi / lo) > rel_width:
        mid = math.sqrt(lo * hi)
        if _level(mid, N, p, M, opts) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def threshold_l0(R1: float, R2: float, N: int, p: float, M: int = 2048,
                 opts: an.SolveOptions | None = None) -> float:
    """l0 = c(R1,R2) / c_infty: orbit sizes strictly above this value meet
    the compactness threshold of the symmetric existence statement."""
    _, rep = an.minimize_annulus(rc.AnnulusSpec(R1, R2, N, p), M, opts)
    if not rep.converged:
        raise NonConvergenceError(f"level solve on ({R1},{R2}) did not converge")
    return rep.level / sb.cached_quantum(N, p)


def threshold_l0_multi(R1: float, R2: float, m: int, N: int, p: float,
                       M: int = 2048, opts: an.SolveOptions | None = None) -> float:
    """l0 = (m+1) c(R1^{1/(m+1)}, R2^{1/(m+1)}) / c_infty (sign-changing chain)."""
    if int(m) != m or m < 1:
        raise DomainError(f"m must be an integer >= 1, got {m}")
    q = 1.0 / (m + 1.0)
    _, rep = an.minimize_annulus(rc.AnnulusSpec(R1 ** q, R2 ** q, N, p), M, opts)
    if not rep.converged:
        raise NonConvergenceError("root-annulus level solve did not converge")
    return (m + 1) * rep.level / sb.cached_quantum(N, p)
