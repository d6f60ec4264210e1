"""Radial grids, quadrature, and the discrete p-Dirichlet energy machinery.

Functions of radius r on an annulus [R1, R2] (or a ball section [0, R]) are
represented by their nodal values on a strictly increasing grid and
interpreted as piecewise linear.  The two ingredients of the functional

    J(u) = (1/p) * int |grad u|^p  -  (1/p*) * int |u|^{p*},

reduced to one dimension with the surface measure omega_{N-1} =
2 pi^{N/2} / Gamma(N/2), are discretized as

    int |grad u|^p   ~  omega * sum_i |s_i|^p * m_i^{N-1} * h_i
    int |u|^{p*}     ~  omega * sum_j |u_j|^{p*} * nu_j,

with cell slopes s_i, cell midpoints m_i, and trapezoidal node weights
nu_j.  The midpoint rule for the gradient term is natural because |u'|^p is
cellwise constant for piecewise-linear u; the trapezoid rule handles the
zeroth-order term.  Both discretizations are exactly invariant under the
dilation u_lambda(r) = lambda^{(p-N)/p} u(r/lambda) acting on grids and
values together, which is what makes all scaling checks in this package
grid-exact.

The hot loops (energy, gradient, lagged stiffness weights) live in the
``kernels`` backend, which is either a compiled Cython extension or a
vectorized numpy fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solveh_banded

from . import kernels
from .errors import DomainError

SPACINGS = ("uniform", "logarithmic")

#: exponents are kept away from the degenerate ends of (1, N)
P_MARGIN = 0.1

#: relative regularization of |s|^{p-2} in the lagged stiffness weights
KAPPA_EPS_REL = 1e-12


def sphere_measure(dim: int) -> float:
    """Surface measure of the unit (dim-1)-sphere, 2 pi^{N/2} / Gamma(N/2)."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def validate_exponents(dim: int, exponent: float) -> None:
    """Reject (N, p) outside the window 1.1 <= p <= N - 0.1, N >= 2."""
    if int(dim) != dim or dim < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {dim}")
    if not (1.0 + P_MARGIN <= exponent <= dim - P_MARGIN):
        raise DomainError(
            f"exponent p={exponent} outside [{1.0 + P_MARGIN}, {dim - P_MARGIN}] "
            f"for N={dim}"
        )


def critical_exponent(dim: int, exponent: float) -> float:
    """p* = N p / (N - p)."""
    return dim * exponent / (dim - exponent)


@dataclass(frozen=True)
class AnnulusSpec:
    """One variational problem instance: the annulus R1 < |x| < R2 in R^N
    with p-Laplacian exponent p."""

    R1: float
    R2: float
    dim: int
    exponent: float

    def __post_init__(self):
        validate_exponents(self.dim, self.exponent)
        if not (0.0 < self.R1 < self.R2):
            raise DomainError(
                f"annulus radii must satisfy 0 < R1 < R2, got ({self.R1}, {self.R2})"
            )

    @property
    def pstar(self) -> float:
        return critical_exponent(self.dim, self.exponent)

    @property
    def ratio(self) -> float:
        return self.R1 / self.R2


@dataclass(eq=False)
class RadialGrid:
    """Strictly increasing radial nodes plus (N, p); carrier for all 1D numerics.

    Instances are immutable after construction (arrays are frozen); the
    quadrature geometry (cell widths, midpoint-rule and trapezoid weights) is
    precomputed once.
    """

    nodes: np.ndarray
    dim: int
    exponent: float
    spacing: str = "logarithmic"

    # geometry, filled in __post_init__
    h: np.ndarray = field(init=False, repr=False)
    cell_weights: np.ndarray = field(init=False, repr=False)
    node_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        validate_exponents(self.dim, self.exponent)
        if self.spacing not in SPACINGS:
            raise DomainError(f"spacing must be one of {SPACINGS}, got {self.spacing!r}")
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if nodes.ndim != 1 or nodes.size < 3:
            raise DomainError("grid needs at least 3 nodes (M >= 2 cells)")
        if np.any(np.diff(nodes) <= 0.0):
            raise DomainError("grid nodes must be strictly increasing")
        if nodes[0] < 0.0:
            raise DomainError("grid nodes must be nonnegative radii")
        N = self.dim
        h = np.diff(nodes)
        mid = 0.5 * (nodes[:-1] + nodes[1:])
        W = mid ** (N - 1) * h
        rN = nodes ** (N - 1)
        nu = np.empty_like(nodes)
        nu[0] = 0.5 * rN[0] * h[0]
        nu[-1] = 0.5 * rN[-1] * h[-1]
        nu[1:-1] = 0.5 * rN[1:-1] * (h[:-1] + h[1:])
        for arr in (nodes, h, W, nu):
            arr.flags.writeable = False
        self.nodes = nodes
        self.h = h
        self.cell_weights = W
        self.node_weights = nu

    @property
    def M(self) -> int:
        """Number of cells."""
        return self.nodes.size - 1

    @property
    def pstar(self) -> float:
        return critical_exponent(self.dim, self.exponent)

    @property
    def measure(self) -> float:
        return sphere_measure(self.dim)

    def same_geometry(self, other: "RadialGrid") -> bool:
        return (
            self.dim == other.dim
            and self.exponent == other.exponent
            and self.nodes.size == other.nodes.size
            and bool(np.all(self.nodes == other.nodes))
        )


def make_grid(spec: AnnulusSpec, M: int, spacing: str = "logarithmic") -> RadialGrid:
    """Grid with r_0 = R1, r_M = R2; logarithmic means log-equispaced nodes."""
    if M < 2:
        raise DomainError(f"need at least M=2 cells, got {M}")
    if spacing == "uniform":
        nodes = np.linspace(spec.R1, spec.R2, M + 1)
    elif spacing == "logarithmic":
        nodes = np.geomspace(spec.R1, spec.R2, M + 1)
    else:
        raise DomainError(f"spacing must be one of {SPACINGS}, got {spacing!r}")
    return RadialGrid(nodes, spec.dim, spec.exponent, spacing)


@dataclass(eq=False)
class RadialFunction:
    """Nodal values of a radial profile on a RadialGrid.

    With the Dirichlet flag set, the first and last value must vanish
    exactly (the discrete W^{1,p}_0 constraint).
    """

    grid: RadialGrid
    values: np.ndarray
    dirichlet: bool = True

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float)).copy()
        if vals.shape != self.grid.nodes.shape:
            raise DomainError(
                f"value count {vals.size} does not match node count {self.grid.nodes.size}"
            )
        if self.dirichlet and not (vals[0] == 0.0 and vals[-1] == 0.0):
            raise DomainError("Dirichlet flag requires u_0 = u_M = 0 exactly")
        vals.flags.writeable = False
        self.values = vals

    # -- small arithmetic conveniences (same grid, flags preserved) --------
    def with_values(self, values: np.ndarray) -> "RadialFunction":
        return RadialFunction(self.grid, values, self.dirichlet)

    def __mul__(self, c: float) -> "RadialFunction":
        return self.with_values(float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "RadialFunction":
        return self.with_values(-self.values)

    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        if not self.grid.same_geometry(other.grid):
            raise DomainError("cannot add functions on different grids")
        return RadialFunction(
            self.grid, self.values + other.values, self.dirichlet and other.dirichlet
        )

    def __call__(self, r) -> np.ndarray:
        """Piecewise-linear interpolation; zero outside the grid support."""
        return np.interp(np.asarray(r, dtype=float), self.grid.nodes, self.values,
                         left=0.0, right=0.0)


def sample_function(grid: RadialGrid, fn, dirichlet: bool = True) -> RadialFunction:
    """Sample a callable r -> u(r) at the nodes (endpoints zeroed if Dirichlet)."""
    vals = np.asarray([float(fn(r)) for r in grid.nodes])
    if dirichlet:
        vals[0] = 0.0
        vals[-1] = 0.0
    return RadialFunction(grid, vals, dirichlet)


# ---------------------------------------------------------------------------
# energy, gradient, residual
# ---------------------------------------------------------------------------

def _raw_terms(u: RadialFunction) -> tuple[float, float]:
    """(sum |s|^p W, sum |u|^{p*} nu) without the sphere measure factor."""
    g = u.grid
    return kernels.energy_terms(
        u.values, g.h, g.cell_weights, g.node_weights, g.exponent, g.pstar
    )


def _raw_gradient(u: RadialFunction) -> tuple[float, float, np.ndarray]:
    """Raw terms plus the nodal gradient of (A/p - B/p*), sphere factor omitted."""
    g = u.grid
    out = np.empty_like(u.values)
    A, B = kernels.energy_gradient(
        u.values, g.h, g.cell_weights, g.node_weights, g.exponent, g.pstar, out
    )
    return A, B, out


def _cell_kappa(values: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Lagged stiffness weights kappa_i = (p-1)|s_i|^{p-2} W_i / h_i^2,
    regularized so p < 2 stays finite at flat cells."""
    s = np.diff(values) / grid.h
    smax = float(np.max(np.abs(s))) if s.size else 0.0
    eps2 = (KAPPA_EPS_REL * smax) ** 2 if smax > 0.0 else 1.0
    out = np.empty_like(grid.h)
    kernels.cell_kappa(values, grid.h, grid.cell_weights, grid.exponent, eps2, out)
    return out


def _interior_solve(kappa: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve K x = rhs for the interior tridiagonal stiffness built from kappa."""
    diag = kappa[:-1] + kappa[1:]
    ab = np.zeros((2, rhs.size))
    ab[0, 1:] = -kappa[1:-1]
    ab[1, :] = diag
    return solveh_banded(ab, rhs)


def _dual_residual(u: RadialFunction) -> float:
    """Dual norm of the interior nodal gradient, normalized by the energy scale.

    This is sqrt(F K^{-1} F / A) with F the interior gradient of the raw
    functional and K the lagged stiffness; the sphere measure cancels.  The
    quantity is dilation invariant and scales like the equation residual in
    the W^{-1,p'} pairing.
    """
    A, _, g = _raw_gradient(u)
    if A == 0.0:
        return 0.0
    F = g[1:-1]
    kappa = _cell_kappa(u.values, u.grid)
    x = _interior_solve(kappa, F)
    val = float(F @ x)
    return math.sqrt(max(val, 0.0) / A)


def grad_norm_p(u: RadialFunction) -> float:
    """int |grad u|^p over R^N, i.e. omega_{N-1} * int |u'|^p r^{N-1} dr."""
    A, _ = _raw_terms(u)
    return u.grid.measure * A


def lpstar_norm_pow(u: RadialFunction) -> float:
    """int |u|^{p*} over R^N (the critical Lebesgue term, already powered)."""
    _, B = _raw_terms(u)
    return u.grid.measure * B


def energy_J(u: RadialFunction) -> float:
    """J(u) = (1/p) int |grad u|^p - (1/p*) int |u|^{p*}."""
    g = u.grid
    A, B = _raw_terms(u)
    return g.measure * (A / g.exponent - B / g.pstar)


def rayleigh_Q(u: RadialFunction) -> float:
    """Q(u) = int |grad u|^p / (int |u|^{p*})^{p/p*}; scale invariant."""
    g = u.grid
    A, B = _raw_terms(u)
    if A == 0.0 and B == 0.0:
        raise DomainError("rayleigh_Q undefined for the zero function")
    if B == 0.0:
        raise DomainError("rayleigh_Q undefined: |u|^{p*} integral vanishes")
    om = g.measure
    return om * A / (om * B) ** (g.exponent / g.pstar)


def gradient_J(u: RadialFunction) -> RadialFunction:
    """Nodal gradient of J: g . h = d/de J(u + e h) for every direction h.

    For Dirichlet functions the boundary components are constrained and
    returned as zero (the gradient in the constrained space).
    """
    _, _, g = _raw_gradient(u)
    g *= u.grid.measure
    if u.dirichlet:
        g[0] = 0.0
        g[-1] = 0.0
    return RadialFunction(u.grid, g, u.dirichlet)


def ode_residual(u: RadialFunction) -> float:
    """Weak-form residual of -(r^{N-1}|u'|^{p-2}u')' = r^{N-1}|u|^{p*-2}u.

    Measured as the dual norm of the interior nodal gradient of J relative
    to the gradient energy; zero function reports 0.  Small at discrete
    solutions, O(h^2) when sampling a smooth exact solution, and O(1) for
    generic bumps.
    """
    return _dual_residual(u)


def extend_by_zero(u: RadialFunction, target: RadialGrid) -> RadialFunction:
    """Embed u into a larger grid that contains u's nodes as a contiguous block.

    Requires the Dirichlet flag (so the junction values are 0 and both norms
    are preserved exactly).
    """
    if not u.dirichlet:
        raise DomainError("extend_by_zero requires a Dirichlet function")
    if target.dim != u.grid.dim or target.exponent != u.grid.exponent:
        raise DomainError("target grid has different (N, p)")
    sub = u.grid.nodes
    start = int(np.searchsorted(target.nodes, sub[0]))
    stop = start + sub.size
    if stop > target.nodes.size or not np.array_equal(target.nodes[start:stop], sub):
        raise DomainError("target grid does not contain the source nodes exactly")
    vals = np.zeros_like(target.nodes)
    vals[start:stop] = u.values
    return RadialFunction(target, vals, dirichlet=True)


# ---------------------------------------------------------------------------
# serialization: CSV with header `r,value`, >= 15 significant digits
# ---------------------------------------------------------------------------

def write_csv(u: RadialFunction, path) -> None:
    with open(path, "w") as fh:
        fh.write("r,value\n")
        for r, v in zip(u.grid.nodes, u.values):
            fh.write(f"{r:.17g},{v:.17g}\n")


def read_csv(path, dim: int, exponent: float, dirichlet: bool = True) -> RadialFunction:
    """Read a profile written by write_csv; the spacing kind is re-inferred."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns r,value")
    nodes, vals = data[:, 0], data[:, 1]
    grid = RadialGrid(nodes, dim, exponent, infer_spacing(nodes))
    return RadialFunction(grid, vals, dirichlet)


def infer_spacing(nodes: np.ndarray, rtol: float = 1e-9) -> str:
    d = np.diff(nodes)
    if np.allclose(d, d[0], rtol=rtol, atol=0.0):
        return "uniform"
    if nodes[0] > 0.0:
        q = nodes[1:] / nodes[:-1]
        if np.allclose(q, q[0], rtol=rtol, atol=0.0):
            return "logarithmic"
    raise DomainError("nodes are neither uniformly nor logarithmically spaced")
