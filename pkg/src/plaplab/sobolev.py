"""Talenti optimizers, the best Sobolev constant S, the quantum c_infty =
S^{N/p}/N, Nehari scaling/projection, and the dilation operator.

The radial optimizer family is U(r) = [alpha + beta r^{p/(p-1)}]^{1-N/p}.
For fixed alpha the exponent beta is *not* taken from any transcribed
formula: ``calibrate_talenti`` pins it by root-finding.  The family
satisfies -Delta_p U = C(alpha,beta) U^{p*-1} pointwise with a constant
C = A/B (test the equation against U itself: A = int |grad U|^p,
B = int U^{p*}), so the ODE residual vanishes exactly when the Nehari
defect log(A/B) does; that signed defect is what the root-find drives to
zero, with full-space adaptive quadrature supplying A and B.  A grid-based
weak-residual check on a large truncated domain certifies the result.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import radial_core as rc
from .errors import DomainError, NumericError

#: quadrature targets for the calibration integrals
_QUAD_KW = dict(epsabs=0.0, epsrel=1e-12, limit=400)

#: grid used for the post-calibration residual certificate
CAL_WINDOW = 1e4
CAL_GRID_M = 16384
CAL_RESIDUAL_TOL = 1e-6

#: floor required of sobolev_constant's truncation radius
MIN_TRUNCATION = 1e3
MIN_SOBOLEV_M = 512


@dataclass(frozen=True)
class TalentiProfile:
    """Radial Sobolev optimizer U(r) = [alpha + beta r^{p/(p-1)}]^{1-N/p}."""

    alpha: float
    beta: float
    dim: int
    exponent: float

    def __post_init__(self):
        rc.validate_exponents(self.dim, self.exponent)
        if not (self.alpha > 0.0 and self.beta > 0.0):
            raise DomainError("TalentiProfile needs alpha > 0 and beta > 0")

    @property
    def pstar(self) -> float:
        return rc.critical_exponent(self.dim, self.exponent)

    @property
    def conjugate(self) -> float:
        """p' = p/(p-1), the radial power inside the bracket."""
        p = self.exponent
        return p / (p - 1.0)

    @property
    def decay(self) -> float:
        """gamma = (N-p)/p; U ~ r^{-gamma p'} at infinity."""
        return (self.dim - self.exponent) / self.exponent

    @property
    def core_scale(self) -> float:
        """Radius where the two bracket terms balance, (alpha/beta)^{1/p'}."""
        return (self.alpha / self.beta) ** (1.0 / self.conjugate)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return (self.alpha + self.beta * r ** self.conjugate) ** (-self.decay)

    def slope(self, r):
        """dU/dr, analytic (negative for r > 0)."""
        r = np.asarray(r, dtype=float)
        pr = self.conjugate
        bracket = self.alpha + self.beta * r ** pr
        return -self.decay * self.beta * pr * r ** (pr - 1.0) * bracket ** (-self.decay - 1.0)


def talenti_eval(profile: TalentiProfile, r: float) -> float:
    """Profile value at radius r >= 0 (r = 0 gives alpha^{1-N/p})."""
    if np.any(np.asarray(r) < 0.0):
        raise DomainError(f"radius must be nonnegative, got {r}")
    out = profile.value(r)
    return float(out) if np.ndim(r) == 0 else out


def talenti_integrals(profile: TalentiProfile) -> tuple[float, float]:
    """(int |grad U|^p, int U^{p*}) over R^N by adaptive quadrature.

    Split at the core scale; the tail integral is mapped to (0,1] by
    r -> rc/t so the slow algebraic decay becomes an integrable endpoint
    singularity.
    """
    N, p, ps = profile.dim, profile.exponent, profile.pstar
    om = rc.sphere_measure(N)
    rc_ = profile.core_scale

    def fa(r):
        return abs(profile.slope(r)) ** p * r ** (N - 1)

    def fb(r):
        return profile.value(r) ** ps * r ** (N - 1)

    def split(f):
        head = quad(f, 0.0, rc_, **_QUAD_KW)[0]
        tail = quad(lambda t: f(rc_ / t) * rc_ / (t * t), 0.0, 1.0, **_QUAD_KW)[0]
        return head + tail

    return om * split(fa), om * split(fb)


def _nehari_defect(log_beta: float, N: int, p: float, alpha: float) -> float:
    """log(A/B) for the profile with beta = exp(log_beta); zero at calibration."""
    prof = TalentiProfile(alpha, math.exp(log_beta), N, p)
    A, B = talenti_integrals(prof)
    return math.log(A / B)


def calibration_grid(profile: TalentiProfile, window: float = CAL_WINDOW,
                     M: int = CAL_GRID_M) -> rc.RadialGrid:
    """Log grid over [core/window, core*window] used for residual certificates."""
    L = profile.core_scale
    nodes = np.geomspace(L / window, L * window, M + 1)
    return rc.RadialGrid(nodes, profile.dim, profile.exponent, "logarithmic")


def sampled_residual(profile: TalentiProfile, window: float = CAL_WINDOW,
                     M: int = CAL_GRID_M) -> float:
    """Weak ODE residual of the profile sampled to a large truncated grid."""
    grid = calibration_grid(profile, window, M)
    u = rc.RadialFunction(grid, profile.value(grid.nodes), dirichlet=False)
    return rc.ode_residual(u)


@functools.lru_cache(maxsize=64)
def _calibrate_cached(N: int, p: float, alpha: float) -> float:
    d0 = _nehari_defect(0.0, N, p, alpha)
    # log(A/B) is affine in log(beta) with slope p-1 (family homogeneity),
    # so one Newton step lands next to the root; bracket and polish anyway.
    guess = -d0 / (p - 1.0)
    lo, hi = guess - 0.5, guess + 0.5
    flo = _nehari_defect(lo, N, p, alpha)
    fhi = _nehari_defect(hi, N, p, alpha)
    tries = 0
    while flo * fhi > 0.0:
        lo -= 1.0
        hi += 1.0
        flo = _nehari_defect(lo, N, p, alpha)
        fhi = _nehari_defect(hi, N, p, alpha)
        tries += 1
        if tries > 40:
            raise NumericError(
                "calibration bracket failed: defect(%g)=%g, defect(%g)=%g "
                "for N=%d p=%g alpha=%g" % (lo, flo, hi, fhi, N, p, alpha)
            )
    root = brentq(_nehari_defect, lo, hi, args=(N, p, alpha), xtol=1e-14, rtol=1e-15)
    res = abs(_nehari_defect(root, N, p, alpha))
    if res > 1e-9:
        raise NumericError(
            "calibration root-find did not converge: |defect|=%.3e at "
            "log(beta)=%.15g (N=%d p=%g alpha=%g)" % (res, root, N, p, alpha)
        )
    return math.exp(root)


def calibrate_talenti(N: int, p: float, alpha: float = 1.0,
                      residual_check: bool = True) -> TalentiProfile:
    """Find beta so the profile solves the critical equation on R^N.

    The root-find drives the Nehari defect log(A/B) to zero (see module
    docstring); with ``residual_check`` the result is certified by sampling
    the profile to a large truncated grid and requiring the weak ODE
    residual to be <= 1e-6.
    """
    rc.validate_exponents(N, p)
    if not alpha > 0.0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    profile = TalentiProfile(alpha, _calibrate_cached(int(N), float(p), float(alpha)), N, p)
    if residual_check:
        res = sampled_residual(profile)
        if res > CAL_RESIDUAL_TOL:
            raise NumericError(
                "calibrated profile failed the residual certificate: "
                "residual=%.3e > %.0e (N=%d p=%g alpha=%g beta=%.15g)"
                % (res, CAL_RESIDUAL_TOL, N, p, alpha, profile.beta)
            )
    return profile


# ---------------------------------------------------------------------------
# best Sobolev constant
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SobolevReport:
    """Best-constant estimate and the energy quantum c_infty = S^{N/p}/N."""

    S: float
    dim: int
    exponent: float
    truncation_radius: float
    grid_size: int
    c_infty: float = 0.0  # filled from S in __post_init__

    def __post_init__(self):
        object.__setattr__(self, "c_infty", quantum_from_S(self.S, self.dim, self.exponent))

    def to_json_dict(self) -> dict:
        return {
            "S": self.S,
            "c_infty": self.c_infty,
            "N": self.dim,
            "p": self.exponent,
            "truncation_radius": self.truncation_radius,
            "grid_size": self.grid_size,
        }


def quantum_from_S(S: float, N: int, p: float) -> float:
    return S ** (N / p) / N


def default_truncation(N: int, p: float) -> float:
    """Truncation radius keeping the |grad U|^p tail mass near 1e-4.

    The gradient-term tail decays like r^{-tau} with tau = (N-p)/(p-1); slow
    decay (tau < 1) needs a larger box than the baseline 1e4.
    """
    tau = (N - p) / (p - 1.0)
    return 10.0 ** min(max(4.0, 4.0 / tau), 8.0)


def tapered_profile(profile: TalentiProfile, truncation_radius: float,
                    M: int) -> rc.RadialFunction:
    """Calibrated profile sampled on a log grid over [1/R, R], linearly
    tapered to zero (in log10 r) over the first and last decade."""
    r_lo = 1.0 / truncation_radius
    nodes = np.geomspace(r_lo, truncation_radius, M + 1)
    grid = rc.RadialGrid(nodes, profile.dim, profile.exponent, "logarithmic")
    lr = np.log10(nodes)
    w = np.clip(np.minimum(lr - lr[0], lr[-1] - lr), 0.0, 1.0)
    vals = profile.value(nodes) * w
    vals[0] = 0.0
    vals[-1] = 0.0
    return rc.RadialFunction(grid, vals, dirichlet=True)


def sobolev_constant(N: int, p: float, truncation_radius: float | None = None,
                     M: int = 2048) -> SobolevReport:
    """Estimate S as the Rayleigh quotient of the tapered calibrated profile."""
    rc.validate_exponents(N, p)
    if truncation_radius is None:
        truncation_radius = default_truncation(N, p)
    if truncation_radius < MIN_TRUNCATION:
        raise DomainError(
            f"truncation_radius must be >= {MIN_TRUNCATION:g}, got {truncation_radius}"
        )
    if M < MIN_SOBOLEV_M:
        raise DomainError(f"M must be >= {MIN_SOBOLEV_M}, got {M}")
    profile = calibrate_talenti(N, p)
    u = tapered_profile(profile, truncation_radius, M)
    S = rc.rayleigh_Q(u)
    return SobolevReport(S=S, dim=N, exponent=p,
                         truncation_radius=truncation_radius, grid_size=M)


@functools.lru_cache(maxsize=32)
def cached_quantum(N: int, p: float) -> float:
    """c_infty at default settings; shared by level tables and checks."""
    return sobolev_constant(N, p).c_infty


# ---------------------------------------------------------------------------
# Nehari scaling and dilation
# ---------------------------------------------------------------------------

def nehari_scale(a: float, b: float, p: float, pstar: float) -> float:
    """t* = (a/b)^{1/(p*-p)}: the unique maximizer of t -> J(t u) given
    a = int |grad u|^p and b = int |u|^{p*}."""
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"nehari_scale needs positive integrals, got a={a}, b={b}")
    if not pstar > p:
        raise DomainError(f"need p* > p, got p*={pstar}, p={p}")
    return (a / b) ** (1.0 / (pstar - p))


def nehari_project(u: rc.RadialFunction) -> rc.RadialFunction:
    """Scale u onto the discrete Nehari manifold: (J'(t*u), t*u) = 0."""
    g = u.grid
    A, B = rc._raw_terms(u)
    if A <= 0.0 or B <= 0.0:
        raise DomainError("nehari_project needs a nonzero function")
    om = g.measure
    t = nehari_scale(om * A, om * B, g.exponent, g.pstar)
    return u.with_values(t * u.values)


def nehari_level(u: rc.RadialFunction) -> float:
    """J after Nehari projection, via the identity J(Pi u) = Q(u)^{N/p}/N."""
    g = u.grid
    return rc.rayleigh_Q(u) ** (g.dim / g.exponent) / g.dim


def dilate(u: rc.RadialFunction, lam: float) -> rc.RadialFunction:
    """u_lambda(r) = lambda^{(p-N)/p} u(r/lambda) on the dilated grid.

    All three energy quantities are invariant exactly (the quadrature
    weights scale by lambda^N and the integrands by lambda^{-N}).
    """
    if not lam > 0.0:
        raise DomainError(f"dilation factor must be positive, got {lam}")
    g = u.grid
    new_grid = rc.RadialGrid(lam * g.nodes, g.dim, g.exponent, g.spacing)
    amp = lam ** ((g.exponent - g.dim) / g.exponent)
    return rc.RadialFunction(new_grid, amp * u.values, u.dirichlet)
