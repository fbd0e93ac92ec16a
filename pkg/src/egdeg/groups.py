"""Finite orthogonal group actions.

A group is stored as an ordered list of orthogonal matrices (identity first)
together with exact index tables for multiplication and inversion.  On top of
that the module computes the full subgroup lattice, conjugacy classes of
subgroups, normalizers, Weyl coset representatives and fixed subspaces, which
is everything the stratification layer needs.

Groups are capped at order 64; enumeration is brute force, which is entirely
adequate at that scale.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ClosureOverflow, IsotropyAmbiguous, NotOrthogonal

MATCH_TOL = 1e-8          # two transforms are identified below this max-norm gap
ORTHO_TOL = 1e-9          # post-orthonormalization quality requirement
INPUT_ORTHO_TOL = 1e-3    # how far a raw generator may drift before rejection
ISO_TOL = 1e-7            # relative residual below which g fixes x
ISO_AMBIG_TOL = 1e-5      # residuals in (ISO_TOL, ISO_AMBIG_TOL) are ambiguous
DEFAULT_CAP = 64


def orthonormalize(mat: np.ndarray) -> np.ndarray:
    """Project a near-orthogonal matrix to the closest orthogonal one (polar)."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise NotOrthogonal(f"expected a square matrix, got shape {mat.shape}")
    if np.max(np.abs(mat.T @ mat - np.eye(mat.shape[0]))) > INPUT_ORTHO_TOL:
        raise NotOrthogonal("generator is not orthogonal within tolerance")
    u, _, vt = np.linalg.svd(mat)
    q = u @ vt
    if np.max(np.abs(q.T @ q - np.eye(q.shape[0]))) > ORTHO_TOL:
        raise NotOrthogonal("orthonormalization failed the 1e-9 quality test")
    return q


@dataclass(frozen=True)
class OrthogonalTransform:
    """A single orthogonal matrix, orthonormalized at construction."""

    matrix: np.ndarray

    @classmethod
    def from_array(cls, mat) -> "OrthogonalTransform":
        return cls(orthonormalize(mat))

    def __eq__(self, other):
        if not isinstance(other, OrthogonalTransform):
            return NotImplemented
        return np.max(np.abs(self.matrix - other.matrix)) <= MATCH_TOL

    def __hash__(self):
        # rounded so that matrices identified by __eq__ share a bucket
        return hash(np.round(self.matrix, 6).tobytes())


@dataclass(frozen=True)
class CircleRep:
    """Rotation action on complex blocks, kept only for the circle demo path."""

    weights: tuple[int, ...]
    trivial_dim: int = 0

    def __post_init__(self):
        if not self.weights:
            raise ValueError("weights must be nonempty")
        if any(w == 0 for w in self.weights):
            raise ValueError("weights must be nonzero integers")


class FiniteGroupRep:
    """Finite group of orthogonal matrices with exact index tables."""

    def __init__(self, elements: np.ndarray, mul_table: np.ndarray,
                 inv_table: np.ndarray):
        self.elements = elements          # (n, d, d)
        self.mul_table = mul_table        # (n, n) int
        self.inv_table = inv_table        # (n,) int
        self._lattice = None

    @property
    def order(self) -> int:
        return self.elements.shape[0]

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def mul(self, i: int, j: int) -> int:
        return int(self.mul_table[i, j])

    def inv(self, i: int) -> int:
        return int(self.inv_table[i])

    def conj(self, g: int, h: int) -> int:
        """Index of g h g^-1."""
        return self.mul(self.mul(g, h), self.inv(g))

    def apply(self, g: int, points: np.ndarray) -> np.ndarray:
        """Apply element g to one point (d,) or a batch (n, d)."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.elements[g].T

    def matrix(self, g: int) -> np.ndarray:
        return self.elements[g]

    @property
    def lattice(self) -> "SubgroupLattice":
        if self._lattice is None:
            self._lattice = subgroup_lattice(self)
        return self._lattice

    def __repr__(self):
        return f"FiniteGroupRep(order={self.order}, dim={self.dim})"


def _match_index(mat: np.ndarray, elements: np.ndarray) -> int:
    """Index of mat in elements under the MATCH_TOL identification, or -1."""
    gaps = np.max(np.abs(elements - mat[None]), axis=(1, 2))
    idx = int(np.argmin(gaps))
    return idx if gaps[idx] <= MATCH_TOL else -1


def close_group(generators, cap: int = DEFAULT_CAP) -> FiniteGroupRep:
    """Generate a finite orthogonal group from matrices by BFS closure.

    Element 0 is the identity; remaining elements appear in BFS discovery
    order, which makes all downstream labels deterministic.  Raises
    ClosureOverflow when more than ``cap`` distinct elements appear and
    NotOrthogonal for bad generators.
    """
    gens = []
    for g in generators:
        mat = g.matrix if isinstance(g, OrthogonalTransform) else g
        gens.append(orthonormalize(mat))
    if not gens:
        raise NotOrthogonal("at least one generator required")
    d = gens[0].shape[0]
    if any(g.shape != (d, d) for g in gens):
        raise NotOrthogonal("generators have mismatched dimensions")

    elements = [np.eye(d)]
    queue = [0]
    while queue:
        i = queue.pop(0)
        for g in gens:
            prod = g @ elements[i]
            if _match_index(prod, np.array(elements)) == -1:
                if len(elements) >= cap:
                    raise ClosureOverflow(
                        f"closure exceeded cap={cap}; increase cap or check generators")
                elements.append(prod)
                queue.append(len(elements) - 1)

    elems = np.array(elements)
    n = len(elements)
    mul_table = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        prods = np.einsum("ab,nbc->nac", elems[i], elems)  # elems[i] @ elems[j]
        gaps = np.max(np.abs(prods[:, None] - elems[None]), axis=(2, 3))
        nearest = np.argmin(gaps, axis=1)
        best = gaps[np.arange(n), nearest]
        if np.any(best > MATCH_TOL):
            raise ClosureOverflow("product fell outside the closed element set")
        # closure must be unambiguous: second-nearest stays clearly apart
        gaps[np.arange(n), nearest] = np.inf
        if np.any(np.min(gaps, axis=1) <= MATCH_TOL):
            raise NotOrthogonal("two distinct elements collide at matching tolerance")
        mul_table[i] = nearest

    inv_table = np.empty(n, dtype=np.int64)
    for i in range(n):
        js = np.nonzero(mul_table[i] == 0)[0]
        if len(js) != 1:
            raise ClosureOverflow("inverse not unique; table inconsistent")
        inv_table[i] = js[0]
    return FiniteGroupRep(elems, mul_table, inv_table)


# ---------------------------------------------------------------------------
# subgroup lattice


@dataclass
class SubgroupRecord:
    """Conjugacy-class representative of a subgroup, with derived data.

    ``member_indices`` is the lexicographically smallest member set of the
    class.  ``weyl_coset_reps`` lists one element per coset of the subgroup in
    its normalizer; acting with those on the fixed space realizes the Weyl
    group action.
    """

    member_indices: tuple[int, ...]
    order: int
    normalizer_indices: tuple[int, ...]
    weyl_coset_reps: tuple[int, ...]
    fixed_basis: np.ndarray      # (d, k) orthonormal columns
    class_id: int

    @property
    def weyl_order(self) -> int:
        return len(self.weyl_coset_reps)

    @property
    def fixed_dim(self) -> int:
        return self.fixed_basis.shape[1]


class SubgroupLattice:
    """All subgroups of a finite group, grouped into conjugacy classes."""

    def __init__(self, group: FiniteGroupRep, records: list[SubgroupRecord],
                 class_members: list[list[tuple[int, ...]]],
                 leq: np.ndarray):
        self.group = group
        self.records = records
        self.class_members = class_members
        self.leq = leq  # leq[a, b] iff class a is subconjugate to class b

    @property
    def n_classes(self) -> int:
        return len(self.records)

    def record(self, class_id: int) -> SubgroupRecord:
        return self.records[class_id]

    def class_of_members(self, members: frozenset[int]) -> int:
        for cid, sets in enumerate(self.class_members):
            if members in (frozenset(s) for s in sets):
                return cid
        raise KeyError("member set is not an enumerated subgroup")

    def class_label(self, class_id: int) -> str:
        """Deterministic readable label, used as the invariant's row key."""
        rec = self.records[class_id]
        if rec.order == 1:
            return "(e)"
        if rec.order == self.group.order:
            return "(G)"
        same_order = [r.class_id for r in self.records if r.order == rec.order]
        suffix = chr(ord("a") + same_order.index(class_id))
        return f"(H{rec.order}{suffix})"

    def conjugate_bases(self, class_id: int) -> list[np.ndarray]:
        """Bases of the distinct conjugate fixed subspaces g V^H."""
        rec = self.records[class_id]
        basis = rec.fixed_basis
        bases, projs = [], []
        for g in range(self.group.order):
            bg = self.group.elements[g] @ basis
            pg = bg @ bg.T
            if not any(np.max(np.abs(pg - p)) <= 1e-9 for p in projs):
                projs.append(pg)
                bases.append(bg)
        return bases


def _subgroup_closure(group: FiniteGroupRep, seed: frozenset[int]) -> frozenset[int]:
    members = set(seed) | {0}
    queue = list(members)
    while queue:
        i = queue.pop()
        for j in list(members):
            for k in (group.mul(i, j), group.mul(j, i)):
                if k not in members:
                    members.add(k)
                    queue.append(k)
        inv = group.inv(i)
        if inv not in members:
            members.add(inv)
            queue.append(inv)
    return frozenset(members)


def _enumerate_subgroups(group: FiniteGroupRep) -> list[frozenset[int]]:
    subs = {frozenset([0])}
    cyclic = {_subgroup_closure(group, frozenset([i])) for i in range(group.order)}
    subs |= cyclic
    # iterated joins until fixpoint
    while True:
        new = set()
        for a, b in itertools.combinations(subs, 2):
            if a <= b or b <= a:
                continue
            j = _subgroup_closure(group, a | b)
            if j not in subs:
                new.add(j)
        if not new:
            break
        subs |= new
    return sorted(subs, key=lambda s: (len(s), tuple(sorted(s))))


def fixed_subspace(group: FiniteGroupRep, members) -> np.ndarray:
    """Orthonormal basis of the common fixed space of the given elements.

    Computed as the null space of the stacked (Q_g - I) system with singular
    value cutoff 1e-9.  Returns a (d, k) array; k may be zero.
    """
    d = group.dim
    members = sorted(set(members))
    rows = np.concatenate([group.elements[g] - np.eye(d) for g in members], axis=0)
    _, svals, vt = np.linalg.svd(rows)
    rank = int(np.sum(svals > 1e-9))
    basis = vt[rank:].T
    # canonical column signs for label stability
    for j in range(basis.shape[1]):
        col = basis[:, j]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0:
            basis[:, j] = -col
    return basis


def subgroup_lattice(group: FiniteGroupRep) -> SubgroupLattice:
    """Enumerate all subgroups, conjugacy classes, and the subconjugacy order."""
    if group.order > DEFAULT_CAP:
        raise ClosureOverflow(f"lattice restricted to order <= {DEFAULT_CAP}")
    subs = _enumerate_subgroups(group)
    assigned: dict[frozenset[int], int] = {}
    classes: list[list[frozenset[int]]] = []
    for s in subs:
        if s in assigned:
            continue
        conjugates = {frozenset(group.conj(g, h) for h in s)
                      for g in range(group.order)}
        cid = len(classes)
        classes.append(sorted(conjugates, key=lambda c: tuple(sorted(c))))
        for c in conjugates:
            assigned[c] = cid

    # stable class ids: decreasing subgroup order, then smallest member set
    order_key = lambda cls: (-len(cls[0]), tuple(sorted(cls[0])))
    classes.sort(key=order_key)

    records = []
    for cid, cls in enumerate(classes):
        rep = cls[0]
        members = tuple(sorted(rep))
        normalizer = tuple(
            g for g in range(group.order)
            if frozenset(group.conj(g, h) for h in rep) == rep)
        reps, seen = [], set()
        for n in normalizer:
            if n in seen:
                continue
            reps.append(n)
            seen.update(group.mul(n, h) for h in members)
        records.append(SubgroupRecord(
            member_indices=members,
            order=len(members),
            normalizer_indices=normalizer,
            weyl_coset_reps=tuple(reps),
            fixed_basis=fixed_subspace(group, members),
            class_id=cid,
        ))

    m = len(classes)
    leq = np.zeros((m, m), dtype=bool)
    for a in range(m):
        for b in range(m):
            rep_b = set(records[b].member_indices)
            leq[a, b] = any(set(s) <= rep_b for s in classes[a])
    return SubgroupLattice(group, records,
                           [[tuple(sorted(c)) for c in cls] for cls in classes],
                           leq)


# ---------------------------------------------------------------------------
# pointwise action


@dataclass(frozen=True)
class Isotropy:
    """Stabilizer of a point, matched to an enumerated subgroup class."""

    member_indices: tuple[int, ...]
    class_id: int

    @property
    def order(self) -> int:
        return len(self.member_indices)


def isotropy(group: FiniteGroupRep, x) -> Isotropy:
    """Stabilizer {g : ||Q_g x - x|| <= tol (1 + |x|)} of the point x.

    Raises IsotropyAmbiguous when any group element has a residual in the
    band (1e-7, 1e-5) relative to 1 + |x|: the point is too close to a larger
    stratum for a reliable classification.
    """
    x = np.asarray(x, dtype=float)
    scale = 1.0 + np.linalg.norm(x)
    residuals = np.linalg.norm(x @ np.swapaxes(group.elements, 1, 2) - x[None], axis=1)
    fixed = residuals <= ISO_TOL * scale
    band = (~fixed) & (residuals <= ISO_AMBIG_TOL * scale)
    if np.any(band):
        g = int(np.nonzero(band)[0][0])
        raise IsotropyAmbiguous(
            f"element {g} has residual {residuals[g]:.3e} in the ambiguity band")
    members = frozenset(int(i) for i in np.nonzero(fixed)[0])
    lattice = group.lattice
    for cid, sets in enumerate(lattice.class_members):
        if any(members == frozenset(s) for s in sets):
            return Isotropy(tuple(sorted(members)), cid)
    raise IsotropyAmbiguous("stabilizer set does not match an enumerated subgroup")


def isotropy_class_map(group: FiniteGroupRep, points: np.ndarray):
    """Vectorized isotropy classification for a batch of points.

    Returns (class_ids, ok) where class_ids[i] is the conjugacy class of the
    stabilizer of points[i] and ok[i] is False for points in the ambiguity
    band or with an unrecognized stabilizer (these get class_id -1).
    """
    pts = np.asarray(points, dtype=float)
    scale = 1.0 + np.linalg.norm(pts, axis=1)
    n = pts.shape[0]
    res = np.empty((group.order, n))
    for g in range(group.order):
        res[g] = np.linalg.norm(pts @ group.elements[g].T - pts, axis=1)
    fixed = res <= ISO_TOL * scale[None]
    band = (~fixed) & (res <= ISO_AMBIG_TOL * scale[None])
    ok = ~np.any(band, axis=0)

    lattice = group.lattice
    lookup = {}
    for cid, sets in enumerate(lattice.class_members):
        for s in sets:
            lookup[frozenset(s)] = cid
    class_ids = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if not ok[i]:
            continue
        members = frozenset(int(g) for g in np.nonzero(fixed[:, i])[0])
        cid = lookup.get(members, -1)
        class_ids[i] = cid
        if cid == -1:
            ok[i] = False
    return class_ids, ok


def orbit(group: FiniteGroupRep, x) -> np.ndarray:
    """Distinct points {Q_g x}; asserts |orbit| * |isotropy| = |G|."""
    x = np.asarray(x, dtype=float)
    images = x @ np.swapaxes(group.elements, 1, 2)
    keep = []
    for img in images:
        if not any(np.max(np.abs(img - k)) <= MATCH_TOL for k in keep):
            keep.append(img)
    pts = np.array(keep)
    iso = isotropy(group, x)
    if len(pts) * iso.order != group.order:
        raise IsotropyAmbiguous(
            f"orbit size {len(pts)} x stabilizer {iso.order} != group order")
    return pts


# ---------------------------------------------------------------------------
# named constructors


def rotation2(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def reflection2(axis_angle: float = 0.0) -> np.ndarray:
    c, s = np.cos(2 * axis_angle), np.sin(2 * axis_angle)
    return np.array([[c, s], [s, -c]])


def cyclic(n: int) -> FiniteGroupRep:
    """Rotations by multiples of 2 pi / n acting on the plane."""
    return close_group([rotation2(2 * np.pi / n)], cap=max(n, 2))


def dihedral(n: int) -> FiniteGroupRep:
    """Rotations by 2 pi / n plus the reflection across the x axis."""
    return close_group([rotation2(2 * np.pi / n), reflection2(0.0)], cap=2 * n)


def symmetric(n: int) -> FiniteGroupRep:
    """All n x n permutation matrices."""
    if n < 1 or math.factorial(n) > DEFAULT_CAP:
        raise ClosureOverflow(f"symmetric({n}) exceeds the order cap")
    swap = np.eye(n)[list(range(n))]
    if n >= 2:
        swap = np.eye(n)[[1, 0] + list(range(2, n))]
    cycle = np.eye(n)[[*range(1, n), 0]] if n >= 2 else np.eye(n)
    return close_group([swap, cycle], cap=math.factorial(n))


def antipodal(d: int) -> FiniteGroupRep:
    """The two-element group {I, -I} acting on d-space."""
    return close_group([-np.eye(d)], cap=2)


def trivial(d: int) -> FiniteGroupRep:
    return close_group([np.eye(d)], cap=1)


def from_generators(matrices, cap: int = DEFAULT_CAP) -> FiniteGroupRep:
    return close_group([np.asarray(m, dtype=float) for m in matrices], cap=cap)
