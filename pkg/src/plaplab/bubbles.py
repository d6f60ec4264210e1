"""Multi-bubble configurations and Monte Carlo checks of the additivity
identities for the gradient norm and the limit energy.

A configuration is an optional compactly supported radial base plus a sum
of rescaled/translated copies of calibrated entire profiles, each copy
replicated over the orbit of a finite orthogonal group.  Integrals over
R^N use multiple importance sampling with one heavy-tailed stratum per
bubble (tail matched to the profile decay) and one far-field stratum, so
no truncation of the bubble tails is ever applied.  Additivity deviations
are estimated by integrating the *difference* between the combined and the
part-wise integrands on shared samples, which resolves deviations far
below the scale of the individual norms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .radial_core import RadialFunction, RadialGrid, energy_J, grad_norm_p, sphere_measure
from .sobolev import (
    TalentiProfile,
    cached_quantum,
    dilate,
    nehari_level,
    nehari_project,
    talenti_integrals,
    tapered_profile,
)
from .symmetry import GroupClosure, orbit_points

#: pairwise separation / scale below this triggers the warning state
SEPARATION_WARN_RATIO = 10.0
MIN_MC_SAMPLES = 10_000
DEFAULT_MC_SAMPLES = 1_000_000
#: proposal tail exponent = TAIL_SAFETY * (N-p)/(p-1); any value <= the
#: profile decay keeps the integrand/proposal ratio bounded
TAIL_SAFETY = 0.9
FAR_TAIL_FACTOR = 0.7
CORE_RADIUS_FACTOR = 3.0
FAR_RADIUS_FACTOR = 10.0


@dataclass(frozen=True)
class MCParams:
    """Monte Carlo budget: samples is the per-stratum count."""

    samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise DomainError(f"samples must be positive, got {self.samples}")


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    samples: int

    def __post_init__(self):
        if self.std_error < 0:
            raise DomainError("std_error must be nonnegative")

    def to_json_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error,
                "samples": self.samples}


@dataclass(frozen=True)
class TalentiBubble:
    """lambda^{(p-N)/p} U(|x - y| / lambda) for a calibrated profile U."""

    center: np.ndarray
    scale: float
    profile: TalentiProfile

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1).copy()
        if c.size != self.profile.dim:
            raise DomainError(
                f"center has dimension {c.size}, profile lives in "
                f"dimension {self.profile.dim}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "center", c)
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"scale must be positive, got {self.scale}")

    @property
    def amplitude(self) -> float:
        N, p = self.profile.dim, self.profile.exponent
        return self.scale ** ((p - N) / p)

    def translated(self, center: np.ndarray) -> "TalentiBubble":
        return TalentiBubble(center=center, scale=self.scale, profile=self.profile)

    def value_at(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        s = np.linalg.norm(pts - self.center, axis=1) / self.scale
        return self.amplitude * self.profile.value(s)

    def gradient_at(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        rel = pts - self.center
        dist = np.linalg.norm(rel, axis=1)
        s = dist / self.scale
        radial = self.amplitude * self.profile.slope(s) / self.scale
        safe = np.where(dist > 0.0, dist, 1.0)
        # profile slope vanishes at the origin, so the 0/0 point is 0
        return (radial / safe)[:, None] * rel


def _base_gradient(base: RadialFunction, pts: np.ndarray) -> np.ndarray:
    nodes = base.grid.nodes
    slopes = np.diff(base.values) / np.diff(nodes)
    dist = np.linalg.norm(pts, axis=1)
    idx = np.clip(np.searchsorted(nodes, dist, side="right") - 1, 0, len(slopes) - 1)
    inside = (dist >= nodes[0]) & (dist <= nodes[-1]) & (dist > 0.0)
    radial = np.where(inside, slopes[idx], 0.0)
    safe = np.where(dist > 0.0, dist, 1.0)
    return (radial / safe)[:, None] * pts


class BubbleConfig:
    """Optional radial base plus group-orbit sums of bubbles.

    bubbles is a sequence of (TalentiBubble, GroupClosure-or-None) pairs;
    each bubble is replicated over the orbit of its center.  Configurations
    whose minimal pairwise (separation / scale) ratio falls below
    SEPARATION_WARN_RATIO carry separation_warning=True (the additivity
    identities are asymptotic and unreliable there).
    """

    def __init__(self, base: RadialFunction | None = None, bubbles=()):
        self.base = base
        self.bubbles = tuple(bubbles)
        expanded: list[TalentiBubble] = []
        for k, (bubble, closure) in enumerate(self.bubbles):
            if not isinstance(bubble, TalentiBubble):
                raise DomainError(f"entry {k}: expected a TalentiBubble")
            if closure is None:
                expanded.append(bubble)
                continue
            if not isinstance(closure, GroupClosure):
                raise DomainError(f"entry {k}: group must be a GroupClosure")
            if not closure.complete:
                raise DomainError(
                    f"entry {k}: orbit expansion requires a complete closure"
                )
            if closure.dim != bubble.profile.dim:
                raise DomainError(
                    f"entry {k}: group dimension {closure.dim} != profile "
                    f"dimension {bubble.profile.dim}"
                )
            for point in orbit_points(bubble.center, closure):
                expanded.append(bubble.translated(point))
        self.expanded = tuple(expanded)
        dims = {b.profile.dim for b in self.expanded}
        exps = {b.profile.exponent for b in self.expanded}
        if self.base is not None:
            dims.add(self.base.grid.dim)
            exps.add(self.base.grid.exponent)
        if len(dims) > 1 or len(exps) > 1:
            raise DomainError(
                f"mixed dimensions/exponents in configuration: {dims}, {exps}"
            )
        self.dim = dims.pop() if dims else 0
        self.exponent = exps.pop() if exps else 0.0
        self.separation_ratio = self._separation_ratio()
        self.separation_warning = self.separation_ratio < SEPARATION_WARN_RATIO
        if self.separation_warning:
            warnings.warn(
                f"bubble separation/scale ratio {self.separation_ratio:.3g} < "
                f"{SEPARATION_WARN_RATIO:g}: additivity identities are "
                "asymptotic and may not hold",
                stacklevel=2,
            )

    def _separation_ratio(self) -> float:
        worst = math.inf
        for i in range(len(self.expanded)):
            for j in range(i + 1, len(self.expanded)):
                a, b = self.expanded[i], self.expanded[j]
                sep = float(np.linalg.norm(a.center - b.center))
                worst = min(worst, sep / max(a.scale, b.scale))
        return worst

    @property
    def is_empty(self) -> bool:
        return self.base is None and not self.expanded


def evaluate_config(cfg: BubbleConfig, x) -> float | np.ndarray:
    """Pointwise value base(|x|) + sum of bubble orbit images."""
    arr = np.asarray(x, dtype=float)
    pts = np.atleast_2d(arr)
    total = np.zeros(pts.shape[0])
    if cfg.base is not None:
        total += cfg.base(np.linalg.norm(pts, axis=1))
    for bubble in cfg.expanded:
        total += bubble.value_at(pts)
    return float(total[0]) if arr.ndim == 1 else total


def config_gradient(cfg: BubbleConfig, pts: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    total = np.zeros_like(pts)
    if cfg.base is not None:
        total += _base_gradient(cfg.base, pts)
    for bubble in cfg.expanded:
        total += bubble.gradient_at(pts)
    return total


# -- multiple importance sampling over R^N ----------------------------------

class _Proposal:
    """Isotropic mixture centered at y: uniform ball of radius a with
    weight theta, Pareto(a, tail) radial law with weight 1 - theta."""

    def __init__(self, dim: int, center: np.ndarray, a: float, tail: float,
                 theta: float = 0.5):
        self.dim = dim
        self.center = np.asarray(center, dtype=float)
        self.a = float(a)
        self.tail = float(tail)
        self.theta = float(theta)
        self._omega = sphere_measure(dim)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        dirs = rng.normal(size=(n, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = np.empty(n)
        in_ball = rng.uniform(size=n) < self.theta
        radii[in_ball] = self.a * rng.uniform(size=int(in_ball.sum())) ** (1.0 / self.dim)
        n_tail = n - int(in_ball.sum())
        # 1 - U lies in (0, 1], keeping the Pareto radius finite
        radii[~in_ball] = self.a * (1.0 - rng.uniform(size=n_tail)) ** (-1.0 / self.tail)
        return self.center + radii[:, None] * dirs

    def density(self, pts: np.ndarray) -> np.ndarray:
        s = np.linalg.norm(pts - self.center, axis=1)
        q = np.zeros(pts.shape[0])
        ball = s < self.a
        q[ball] = self.theta * self.dim / (self._omega * self.a ** self.dim)
        tail = ~ball
        st = s[tail]
        q[tail] = ((1.0 - self.theta) * self.tail * self.a ** self.tail
                   / (self._omega * st ** (self.tail + self.dim)))
        return q


def _config_proposals(cfg: BubbleConfig) -> list[_Proposal]:
    N, p = cfg.dim, cfg.exponent
    tail = TAIL_SAFETY * (N - p) / (p - 1.0)
    props: list[_Proposal] = []
    reach = 0.0
    for bubble in cfg.expanded:
        core = bubble.scale * bubble.profile.core_scale
        props.append(_Proposal(N, bubble.center, CORE_RADIUS_FACTOR * core, tail))
        reach = max(reach, float(np.linalg.norm(bubble.center))
                    + FAR_RADIUS_FACTOR * core)
    if cfg.base is not None:
        outer = float(cfg.base.grid.nodes[-1])
        props.append(_Proposal(N, np.zeros(N), 1.1 * outer, tail))
        reach = max(reach, outer)
    if not props:
        raise DomainError("empty configuration has no sampling strata")
    props.append(_Proposal(N, np.zeros(N), 2.0 * reach, FAR_TAIL_FACTOR * tail))
    return props


def _mis_integrate(integrands, proposals, samples: int, seed: int
                   ) -> list[MCEstimate]:
    """Balance-heuristic MIS with equal per-stratum budgets; all integrands
    are evaluated on the same sample set."""
    children = np.random.SeedSequence(seed).spawn(len(proposals))
    sums = np.zeros(len(integrands))
    variances = np.zeros(len(integrands))
    total = 0
    for prop, child in zip(proposals, children):
        rng = np.random.default_rng(child)
        pts = prop.sample(samples, rng)
        q = np.zeros(samples)
        for other in proposals:
            q += other.density(pts)
        for k, fn in enumerate(integrands):
            w = fn(pts) / q
            sums[k] += w.mean()
            variances[k] += w.var(ddof=1) / samples
        total += samples
    return [MCEstimate(value=float(sums[k]),
                       std_error=float(math.sqrt(variances[k])),
                       samples=total)
            for k in range(len(integrands))]


def config_norm_p(cfg: BubbleConfig, mc_params: MCParams) -> MCEstimate:
    """MC estimate of the full-space gradient p-norm of the configuration."""
    if mc_params.samples < MIN_MC_SAMPLES:
        raise DomainError(
            f"config_norm_p needs >= {MIN_MC_SAMPLES} samples per stratum, "
            f"got {mc_params.samples}"
        )
    p = cfg.exponent

    def integrand(pts):
        g = config_gradient(cfg, pts)
        return np.linalg.norm(g, axis=1) ** p

    props = _config_proposals(cfg)
    return _mis_integrate([integrand], props, mc_params.samples, mc_params.seed)[0]


@dataclass(frozen=True)
class AdditivityReport:
    """Relative deviations of the combined configuration from the additive
    prediction, for the gradient p-norm and for the limit energy.

    The MC estimates integrate the difference (combined - sum of parts)
    directly; predictions are exact 1D quadratures (orbit size times the
    single-bubble value, plus the base contribution)."""

    norm_deviation: float
    energy_deviation: float
    norm_difference: MCEstimate
    energy_difference: MCEstimate
    norm_prediction: float
    energy_prediction: float

    def to_json_dict(self) -> dict:
        return {
            "norm_deviation": self.norm_deviation,
            "energy_deviation": self.energy_deviation,
            "norm_difference": self.norm_difference.to_json_dict(),
            "energy_difference": self.energy_difference.to_json_dict(),
            "norm_prediction": self.norm_prediction,
            "energy_prediction": self.energy_prediction,
        }


def additivity_check(cfg: BubbleConfig, mc_params: MCParams) -> AdditivityReport:
    """Verify ||grad(sum)||_p^p ~ sum of parts and phi_infty(sum) ~ sum of
    part energies; returns relative deviations with their MC errors."""
    if not cfg.expanded:
        raise DomainError("additivity_check needs at least one bubble")
    if mc_params.samples < MIN_MC_SAMPLES:
        raise DomainError(
            f"additivity_check needs >= {MIN_MC_SAMPLES} samples per stratum, "
            f"got {mc_params.samples}"
        )
    p = cfg.exponent
    ps = cfg.expanded[0].profile.pstar

    norm_pred = 0.0
    energy_pred = 0.0
    if cfg.base is not None:
        norm_pred += grad_norm_p(cfg.base)
        energy_pred += energy_J(cfg.base)
    for bubble in cfg.expanded:
        a_u, b_u = talenti_integrals(bubble.profile)
        norm_pred += a_u
        energy_pred += a_u / p - b_u / ps

    def norm_difference(pts):
        combined = np.linalg.norm(config_gradient(cfg, pts), axis=1) ** p
        parts = np.zeros(pts.shape[0])
        if cfg.base is not None:
            parts += np.linalg.norm(_base_gradient(cfg.base, pts), axis=1) ** p
        for bubble in cfg.expanded:
            parts += np.linalg.norm(bubble.gradient_at(pts), axis=1) ** p
        return combined - parts

    def lpstar_difference(pts):
        combined = np.abs(evaluate_config(cfg, pts)) ** ps
        parts = np.zeros(pts.shape[0])
        if cfg.base is not None:
            parts += np.abs(cfg.base(np.linalg.norm(pts, axis=1))) ** ps
        for bubble in cfg.expanded:
            parts += bubble.value_at(pts) ** ps
        return combined - parts

    def energy_difference(pts):
        return norm_difference(pts) / p - lpstar_difference(pts) / ps

    props = _config_proposals(cfg)
    norm_est, energy_est = _mis_integrate(
        [norm_difference, energy_difference], props,
        mc_params.samples, mc_params.seed,
    )
    return AdditivityReport(
        norm_deviation=abs(norm_est.value) / norm_pred,
        energy_deviation=abs(energy_est.value) / energy_pred,
        norm_difference=norm_est,
        energy_difference=energy_est,
        norm_prediction=norm_pred,
        energy_prediction=energy_pred,
    )


# -- the energy quantum ------------------------------------------------------

def two_cap_level(profile: TalentiProfile, window: float = 100.0,
                  M: int = 1024, spread: float = 1e5) -> float:
    """Energy of a sign-changing two-cap candidate: a tapered calibrated cap
    minus a far dilate of itself, each cap Nehari-projected individually.
    Supports are disjoint, so the level is the sum of the cap levels."""
    if spread <= window ** 2:
        raise DomainError(
            f"spread {spread} must exceed window^2 = {window ** 2} for "
            "disjoint cap supports"
        )
    cap = nehari_project(tapered_profile(profile, window, M))
    far = dilate(cap, spread)
    nodes = np.concatenate([cap.grid.nodes, far.grid.nodes])
    grid = RadialGrid(nodes=nodes, dim=profile.dim, exponent=profile.exponent,
                      spacing="logarithmic")
    values = np.concatenate([cap.values, -far.values])
    return energy_J(RadialFunction(grid=grid, values=values, dirichlet=True))


def energy_quantum_check(profile: TalentiProfile, c_reference: float | None = None,
                         rel_tol: float = 0.01) -> float:
    """phi_infty of a calibrated profile by radial quadrature.

    Asserts the one-bubble quantum phi_infty >= c_infty - tolerance and the
    two-cap sign-changing bound level >= 2 c_infty - tolerance; returns
    phi_infty."""
    N, p = profile.dim, profile.exponent
    a_u, b_u = talenti_integrals(profile)
    phi = a_u / p - b_u / profile.pstar
    c_ref = cached_quantum(N, p) if c_reference is None else float(c_reference)
    if phi < c_ref * (1.0 - rel_tol):
        raise NumericError(
            f"energy quantum violated: phi_infty = {phi:.12g} < "
            f"(1 - {rel_tol:g}) * c_infty = {c_ref * (1 - rel_tol):.12g}"
        )
    cap_level = two_cap_level(profile)
    if cap_level < 2.0 * c_ref * (1.0 - rel_tol):
        raise NumericError(
            f"two-cap bound violated: level = {cap_level:.12g} < "
            f"(1 - {rel_tol:g}) * 2 c_infty = {2 * c_ref * (1 - rel_tol):.12g}"
        )
    return phi
