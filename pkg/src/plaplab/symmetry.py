"""Finite orthogonal symmetry groups: closure of generator sets, fixed
subspace, minimal orbit cardinality l(G), the constant mu^G, and orbit
separation for bubble placement.

Matrices are compared with a max-entry tolerance of 1e-9: generators carry
~1e-15 roundoff and products of orthogonal matrices do not amplify it, while
genuinely distinct elements of groups up to order ~1e4 differ by far more.
Groups whose closure overflows the order cap are flagged incomplete and
treated as effectively infinite: orbit quantities are then reported as
sampling lower bounds with an explicit infinite marker for l.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError

MATRIX_TOL = 1e-9
DEFAULT_MAX_ORDER = 10_000

#: value used for "effectively infinite" cardinalities (JSON spells it "inf")
INFINITE = math.inf


def _as_matrices(generators, dim: int) -> list[np.ndarray]:
    mats = []
    for k, g in enumerate(generators):
        m = np.asarray(g, dtype=float)
        if m.shape != (dim, dim):
            raise DomainError(f"generator {k} has shape {m.shape}, expected ({dim},{dim})")
        defect = float(np.max(np.abs(m.T @ m - np.eye(dim))))
        if defect > MATRIX_TOL:
            raise DomainError(
                f"generator {k} is not orthogonal: max |g^T g - I| = {defect:.3e}"
            )
        mats.append(m)
    return mats


@dataclass(frozen=True)
class GroupSpec:
    """Generator matrices of a (sub)group of O(N)."""

    dim: int
    generators: tuple = ()

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim}")
        mats = tuple(m.copy() for m in _as_matrices(self.generators, self.dim))
        for m in mats:
            m.flags.writeable = False
        object.__setattr__(self, "generators", mats)


@dataclass(frozen=True)
class GroupClosure:
    """Deduplicated element list of the generated group; complete=False
    means the breadth-first closure overflowed max_order."""

    dim: int
    elements: np.ndarray  # shape (n, N, N); elements[0] is the identity
    complete: bool

    @property
    def order(self) -> int:
        return self.elements.shape[0]


class _MatrixSet:
    """Tolerance-aware dedup: 6-decimal buckets, exact tol check inside."""

    def __init__(self):
        self._buckets: dict = {}
        self.items: list[np.ndarray] = []

    @staticmethod
    def _key(m: np.ndarray):
        return tuple(np.round(m.ravel(), 6))

    def add(self, m: np.ndarray) -> bool:
        key = self._key(m)
        bucket = self._buckets.setdefault(key, [])
        for other in bucket:
            if np.max(np.abs(other - m)) <= MATRIX_TOL:
                return False
        bucket.append(m)
        self.items.append(m)
        return True


def close_group(spec: GroupSpec, max_order: int = DEFAULT_MAX_ORDER) -> GroupClosure:
    """Breadth-first closure of the generators under products.

    A finite set of orthogonal matrices closed under products is closed
    under inverses too, so products alone suffice.  Overflowing max_order
    yields complete=False.
    """
    if max_order < 1:
        raise DomainError(f"max_order must be >= 1, got {max_order}")
    gens = _as_matrices(spec.generators, spec.dim)
    seen = _MatrixSet()
    identity = np.eye(spec.dim)
    seen.add(identity)
    frontier = [identity]
    complete = True
    while frontier:
        fresh = []
        for a in frontier:
            for g in gens:
                c = a @ g
                if seen.add(c):
                    fresh.append(c)
        if len(seen.items) > max_order:
            complete = False
            break
        frontier = fresh
    elements = np.stack(seen.items)
    elements.flags.writeable = False
    return GroupClosure(dim=spec.dim, elements=elements, complete=complete)


def fixed_subspace(closure: GroupClosure) -> np.ndarray:
    """Orthonormal basis (columns) of Fix(G) = {x : gx = x for all g};
    shape (N, d) with d possibly 0."""
    if not closure.complete:
        raise DomainError("fixed_subspace requires a complete closure")
    N = closure.dim
    stacked = (closure.elements - np.eye(N)).reshape(-1, N)
    # right singular vectors with vanishing singular value span Fix(G)
    _, s, vt = np.linalg.svd(stacked)
    s = np.concatenate([s, np.zeros(max(0, N - s.size))])
    basis = vt[s <= MATRIX_TOL].T
    return np.ascontiguousarray(basis)


def orbit_points(x: np.ndarray, closure: GroupClosure, tol: float = 1e-8
                 ) -> np.ndarray:
    """Distinct points of the orbit {g x}, deduplicated relative to |x|."""
    x = np.asarray(x, dtype=float)
    images = closure.elements @ x
    scale = float(np.linalg.norm(x))
    if scale == 0.0:
        return images[:1]
    n = images.shape[0]
    if n <= 2048:
        dist = np.linalg.norm(images[:, None, :] - images[None, :, :], axis=2)
        close = dist <= tol * scale
        available = np.ones(n, dtype=bool)
        kept_idx = []
        for i in range(n):
            if available[i]:
                kept_idx.append(i)
                available &= ~close[i]
        return images[kept_idx]
    kept: list[np.ndarray] = []
    for pt in images:
        if all(np.max(np.abs(pt - q)) > tol * scale for q in kept):
            kept.append(pt)
    return np.stack(kept)


def orbit_size(x: np.ndarray, closure: GroupClosure) -> int:
    return orbit_points(x, closure).shape[0]


@dataclass(frozen=True)
class OrbitReport:
    """Minimal orbit cardinality and its witness.

    l is an integer for complete closures and the infinite marker (math.inf)
    for incomplete ones, in which case lower_bound carries the smallest
    orbit-size floor observed by sampling.
    """

    l: float
    fix_dim: int
    witness: np.ndarray | None
    exact: bool = True
    group_order: int = 0
    lower_bound: int | None = None

    def to_json_dict(self) -> dict:
        return {
            "l": "inf" if math.isinf(self.l) else int(self.l),
            "fix_dim": self.fix_dim,
            "witness": None if self.witness is None else list(self.witness),
            "exact": self.exact,
            "group_order": self.group_order,
            "lower_bound": self.lower_bound,
        }


def _eigen_one_candidates(closure: GroupClosure, rng: np.random.Generator
                          ) -> list[np.ndarray]:
    """Unit vectors from eigenspace-1 of single elements and of pairs.

    Maximal stabilizers fix the candidate directions: any point with a
    nontrivial stabilizer H lies in the 1-eigenspace of every element of H.
    """
    N = closure.dim
    cands: list[np.ndarray] = []
    shifted: list[np.ndarray] = []  # g - I whenever ker(g - I) != {0}
    eye = np.eye(N)
    for g in closure.elements[1:]:
        d = g - eye
        _, s, vt = np.linalg.svd(d)
        space = vt[s <= 1e-7]  # orthonormal rows spanning ker(g - I)
        if space.size == 0:
            continue
        shifted.append(d)
        cands.extend(space)
        if space.shape[0] >= 2:
            for _ in range(2):
                c = rng.normal(size=space.shape[0]) @ space
                cands.append(c / np.linalg.norm(c))
    if len(shifted) <= 64:
        # ker(g - I) ∩ ker(h - I) is the nullspace of the stacked pair
        for i in range(len(shifted)):
            for j in range(i + 1, len(shifted)):
                _, s, vt = np.linalg.svd(np.vstack([shifted[i], shifted[j]]))
                cands.extend(vt[s <= 1e-7])
    return _dedup_directions(cands)


def _dedup_directions(cands, decimals: int = 6) -> list[np.ndarray]:
    """Normalize to unit vectors with a canonical sign and drop duplicates
    (many group elements share eigenvectors, and each duplicate would cost
    a full orbit enumeration downstream)."""
    out: list[np.ndarray] = []
    seen: set = set()
    for c in cands:
        norm = float(np.linalg.norm(c))
        if norm < 0.5:
            continue
        v = c / norm
        for comp in v:
            if abs(comp) > 1e-8:
                if comp < 0:
                    v = -v
                break
        key = tuple(np.round(v, decimals))
        if key not in seen:
            seen.add(key)
            out.append(v)
    return out


def min_orbit_card(closure: GroupClosure, samples: int = 1000, seed: int = 0
                   ) -> OrbitReport:
    """Minimal orbit cardinality l = min over x != 0 of #{g x}.

    Fix(G) != {0} forces l = 1.  Otherwise candidate witnesses come from
    the 1-eigenspaces of elements and their pairwise intersections (points
    with nontrivial stabilizer live there), with random directions as a
    sampling floor.  Incomplete closures report the infinite marker plus a
    sampled lower bound.
    """
    rng = np.random.default_rng(seed)
    N = closure.dim
    if not closure.complete:
        sizes = []
        for _ in range(samples):
            x = rng.normal(size=N)
            sizes.append(orbit_size(x / np.linalg.norm(x), closure))
        return OrbitReport(l=INFINITE, fix_dim=0, witness=None, exact=False,
                           group_order=closure.order,
                           lower_bound=int(min(sizes)))
    fix = fixed_subspace(closure)
    if fix.shape[1] >= 1:
        return OrbitReport(l=1, fix_dim=fix.shape[1], witness=fix[:, 0],
                           exact=True, group_order=closure.order)
    best = closure.order
    witness = None
    for cand in _eigen_one_candidates(closure, rng):
        size = orbit_size(cand, closure)
        if size < best:
            best, witness = size, cand
    for _ in range(32):
        x = rng.normal(size=N)
        x /= np.linalg.norm(x)
        size = orbit_size(x, closure)
        if size < best:
            best, witness = size, x
    if witness is None:
        # no element fixes a line: generic points realize the minimum
        witness = rng.normal(size=N)
        witness /= np.linalg.norm(witness)
        best = orbit_size(witness, closure)
    return OrbitReport(l=best, fix_dim=0, witness=witness, exact=True,
                       group_order=closure.order)


def mu_G(closure: GroupClosure, domain_sampler, c_infty: float,
         samples: int = 512, seed: int = 0) -> float:
    """(min sampled orbit cardinality over the domain) * c_infty.

    domain_sampler(n, rng) must yield points of the closed G-invariant
    domain; for annuli avoiding Fix(G) this returns l(G) * c_infty.
    """
    if not closure.complete:
        raise DomainError("mu_G requires a complete closure")
    rng = np.random.default_rng(seed)
    pts = np.asarray(domain_sampler(samples, rng), dtype=float)
    if pts.size == 0:
        raise DomainError("domain sampler yielded no points")
    pts = pts.reshape(-1, closure.dim)
    best = min(orbit_size(x, closure) for x in pts)
    return best * c_infty


def annulus_sampler(R1: float, R2: float, dim: int):
    """Uniform-in-radius sampler of the closed annulus (helper for mu_G)."""
    if not 0.0 < R1 < R2:
        raise DomainError(f"need 0 < R1 < R2, got ({R1}, {R2})")

    def sampler(n, rng):
        d = rng.normal(size=(n, dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = rng.uniform(R1, R2, size=(n, 1))
        return r * d

    return sampler


def orbit_separation(y: np.ndarray, closure: GroupClosure) -> float:
    """Minimal pairwise distance among distinct orbit points of y; the
    infinite marker when the orbit is a singleton."""
    y = np.asarray(y, dtype=float)
    if float(np.linalg.norm(y)) == 0.0:
        raise DomainError("orbit_separation needs y != 0")
    if not closure.complete:
        raise DomainError("orbit_separation requires a complete closure")
    pts = orbit_points(y, closure)
    k = pts.shape[0]
    if k == 1:
        return INFINITE
    diffs = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diffs ** 2).sum(-1))
    return float(np.min(dist[np.triu_indices(k, 1)]))


# -- convenient generator constructors (used by tests and the CLI) ----------

def rotation_generator(dim: int, axis_i: int, axis_j: int, angle: float) -> np.ndarray:
    """Identity except a 2D rotation by `angle` in the (i, j) plane."""
    if not (0 <= axis_i < dim and 0 <= axis_j < dim and axis_i != axis_j):
        raise DomainError(f"invalid plane ({axis_i}, {axis_j}) in dimension {dim}")
    g = np.eye(dim)
    c, s = math.cos(angle), math.sin(angle)
    g[axis_i, axis_i] = c
    g[axis_j, axis_j] = c
    g[axis_i, axis_j] = -s
    g[axis_j, axis_i] = s
    return g
