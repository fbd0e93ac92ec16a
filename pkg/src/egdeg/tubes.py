"""Flat tube geometry around strata.

All strata in this package are open subsets of finite unions of linear
subspaces (the conjugates g V^H), so tubular neighbourhoods reduce to
orthogonal projection: a point z near the stratum decomposes uniquely as
z = x + v with x the projection to the nearest conjugate subspace and v the
normal offset.  The invariant neighbourhood U is stored as the rho-ball
neighbourhood of a finite set of stratum centers, which makes membership,
boundary and distance computations exact up to a conservative bound.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousProjection


class SubspaceFamily:
    """The distinct conjugate subspaces g V^H with projection helpers."""

    def __init__(self, bases: list[np.ndarray]):
        if not bases:
            raise ValueError("at least one subspace required")
        self.bases = [np.asarray(b, dtype=float) for b in bases]
        self.dim = self.bases[0].shape[0]
        self.k = self.bases[0].shape[1]
        self.projectors = np.array([b @ b.T for b in self.bases])  # (J, d, d)

    @property
    def count(self) -> int:
        return len(self.bases)

    def distances(self, points: np.ndarray) -> np.ndarray:
        """(J, N) distances from each point to each subspace."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty((self.count, pts.shape[0]))
        for j, proj in enumerate(self.projectors):
            out[j] = np.linalg.norm(pts - pts @ proj.T, axis=1)
        return out

    def decompose(self, points: np.ndarray):
        """Split points into base + normal against the nearest subspace.

        Returns (idx, x, v, s, gap): nearest subspace index per point, the
        projections x, normal offsets v, their norms s, and the distance gap
        to the second-nearest subspace (inf when there is only one).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dists = self.distances(pts)
        idx = np.argmin(dists, axis=0)
        x = np.empty_like(pts)
        for j in range(self.count):
            mask = idx == j
            if np.any(mask):
                x[mask] = pts[mask] @ self.projectors[j].T
        v = pts - x
        s = np.linalg.norm(v, axis=1)
        if self.count == 1:
            gap = np.full(pts.shape[0], np.inf)
        else:
            sorted_d = np.sort(dists, axis=0)
            gap = sorted_d[1] - sorted_d[0]
        return idx, x, v, s, gap

    def min_distance(self, points: np.ndarray) -> np.ndarray:
        return np.min(self.distances(points), axis=0)


@dataclass(frozen=True)
class TubeSpec:
    """Validated invariant tube data: centers, stratum radius, tube radius.

    ``centers`` lie on the conjugate subspaces and are closed under the group
    action; U is their open rho-neighbourhood inside the stratum.  ``margin``
    records the smallest sampled field magnitude on the lateral shell.
    ``point_stratum`` marks the zero-dimensional case, whose U has empty
    boundary and therefore an empty shell.
    """

    class_id: int
    centers: np.ndarray          # (M, d)
    rho: float
    epsilon: float
    point_stratum: bool = False
    margin: float = float("inf")

    @property
    def is_empty(self) -> bool:
        return self.centers.shape[0] == 0


class TubeGeometry:
    """Membership, decomposition and distance queries for one tube."""

    def __init__(self, family: SubspaceFamily, spec: TubeSpec):
        self.family = family
        self.spec = spec

    # -- decomposition ---------------------------------------------------

    def decompose(self, points: np.ndarray):
        """Per-point tube decomposition data.

        Returns a dict of arrays: base points ``x``, offsets ``v``, norms
        ``s``, nearest-center distance ``dcen`` of the base point, subspace
        ``idx`` and the projection ``gap``.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx, x, v, s, gap = self.family.decompose(pts)
        if self.spec.is_empty:
            dcen = np.full(pts.shape[0], np.inf)
        else:
            diffs = x[:, None, :] - self.spec.centers[None, :, :]
            dcen = np.min(np.linalg.norm(diffs, axis=2), axis=1)
        return {"idx": idx, "x": x, "v": v, "s": s, "dcen": dcen, "gap": gap}

    def decompose_checked(self, point: np.ndarray):
        """Single-point decomposition with the ambiguity guard.

        Raises AmbiguousProjection when two conjugate subspaces compete within
        epsilon/10; returns None when the point is outside the open tube.
        """
        dec = self.decompose(np.asarray(point, dtype=float)[None])
        gap = float(dec["gap"][0])
        if gap <= self.spec.epsilon / 10.0:
            raise AmbiguousProjection(
                f"projection gap {gap:.3e} below epsilon/10")
        inside = (dec["dcen"][0] < self.spec.rho) and (dec["s"][0] < self.spec.epsilon)
        if not inside:
            return None
        return dec["x"][0], dec["v"][0]

    # -- membership ------------------------------------------------------

    def in_open_tube(self, points: np.ndarray, dec=None) -> np.ndarray:
        """Mask for U^epsilon = {x + v : x in U, |v| < epsilon}."""
        if dec is None:
            dec = self.decompose(points)
        return (dec["dcen"] < self.spec.rho) & (dec["s"] < self.spec.epsilon)

    def in_closed_tube(self, points: np.ndarray, scale: float = 1.0) -> np.ndarray:
        """Mask for cl(U^(scale * epsilon))."""
        dec = self.decompose(points)
        eps = self.spec.epsilon * scale
        return (dec["dcen"] <= self.spec.rho) & (dec["s"] <= eps)

    def in_shell(self, points: np.ndarray) -> np.ndarray:
        """Mask for the lateral shell B^epsilon (exact, measure zero)."""
        if self.spec.point_stratum or self.spec.is_empty:
            return np.zeros(np.atleast_2d(points).shape[0], dtype=bool)
        dec = self.decompose(points)
        return (dec["dcen"] == self.spec.rho) & (dec["s"] <= self.spec.epsilon)

    # -- distances (conservative lower bounds inside U) -------------------

    def shell_distance(self, points: np.ndarray) -> np.ndarray:
        """Lower bound on the distance to B^epsilon; inf when B is empty."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.spec.point_stratum or self.spec.is_empty:
            return np.full(pts.shape[0], np.inf)
        dec = self.decompose(pts)
        radial = np.abs(dec["dcen"] - self.spec.rho)
        lateral = np.maximum(0.0, dec["s"] - self.spec.epsilon)
        return np.hypot(radial, lateral)

    def closed_tube_distance(self, points: np.ndarray, scale: float = 1.0) -> np.ndarray:
        """Lower bound on the distance to cl(U^(scale*epsilon))."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.spec.is_empty:
            return np.full(pts.shape[0], np.inf)
        dec = self.decompose(pts)
        radial = np.maximum(0.0, dec["dcen"] - self.spec.rho)
        lateral = np.maximum(0.0, dec["s"] - self.spec.epsilon * scale)
        return np.hypot(radial, lateral)

    # -- sampling ----------------------------------------------------------

    @property
    def trivial_normal(self) -> bool:
        return self.family.k == self.family.dim

    def sample_tube(self, n: int, rng: np.random.Generator,
                    eps_scale: float = 1.0) -> np.ndarray:
        """Random points of U^(scale*eps), uniform-ish over centers."""
        if self.spec.is_empty:
            return np.empty((0, self.family.dim))
        out = []
        centers = self.spec.centers
        eps = self.spec.epsilon * eps_scale
        attempts = 0
        while len(out) < n and attempts < 200 * n:
            attempts += 1
            c = centers[rng.integers(0, len(centers))]
            dec = self.decompose(c[None])
            j = int(dec["idx"][0])
            b = self.family.bases[j]
            if b.shape[1] > 0 and not self.spec.point_stratum:
                u = rng.normal(size=b.shape[1])
                r = rng.uniform(0, self.spec.rho)
                x = c + (b @ u) * (r / (np.linalg.norm(u) + 1e-300))
            else:
                x = c
            if self.trivial_normal:
                # the tube of a full-dimensional stratum is the base set
                if np.min(np.linalg.norm(x[None] - centers, axis=1)) < self.spec.rho:
                    out.append(x)
                continue
            w = rng.normal(size=self.family.dim)
            w = w - x_project(self.family, j, w)
            nw = np.linalg.norm(w)
            if nw < 1e-12:
                continue
            s = rng.uniform(0, eps)
            z = x + w * (s / nw)
            dec2 = self.decompose(z[None])
            if dec2["dcen"][0] < self.spec.rho and dec2["s"][0] < eps:
                out.append(z)
        return np.array(out) if out else np.empty((0, self.family.dim))

    def sample_shell(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Random points of B^epsilon; empty when the shell is empty."""
        if self.spec.point_stratum or self.spec.is_empty:
            return np.empty((0, self.family.dim))
        out = []
        centers = self.spec.centers
        attempts = 0
        while len(out) < n and attempts < 50 * n:
            attempts += 1
            c = centers[rng.integers(0, len(centers))]
            dec = self.decompose(c[None])
            j = int(dec["idx"][0])
            b = self.family.bases[j]
            if b.shape[1] == 0:
                break
            u = rng.normal(size=b.shape[1])
            x = c + (b @ u) * (self.spec.rho / (np.linalg.norm(u) + 1e-300))
            diffs = np.linalg.norm(x[None] - centers, axis=1)
            if np.min(diffs) < self.spec.rho * (1 - 1e-9):
                continue  # interior of another ball, not on the boundary
            if self.trivial_normal:
                out.append(x)
                continue
            w = rng.normal(size=self.family.dim)
            w = w - x_project(self.family, j, w)
            nw = np.linalg.norm(w)
            if nw < 1e-12:
                continue
            s = rng.uniform(0, self.spec.epsilon)
            out.append(x + w * (s / nw))
        return np.array(out) if out else np.empty((0, self.family.dim))


def x_project(family: SubspaceFamily, j: int, vec: np.ndarray) -> np.ndarray:
    return family.projectors[j] @ vec
