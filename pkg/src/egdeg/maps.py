"""Gradient local maps: a base potential under a stack of tube perturbations.

Evaluation walks the layer stack top down.  Inside a layer's open tube the
potential is the underlying potential at the retracted point plus the well
profile of the normal offset; elsewhere the layer is the identity.  Gradients
use the exact chain rule through the retraction (the strata are flat, so the
retraction Jacobian has the closed form P + mu N + (mu'/s) v v^T); Hessians
through layers fall back to central differences of the gradient.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .domains import MapDomain, UnionDomain, validate_invariance as _dom_invariance
from .errors import DomainsOverlap, NotInvariant, OutsideDomain
from .groups import FiniteGroupRep
from .potentials import (
    PiecewisePotential,
    Potential,
    scale_potential,
    validate_gradient_consistency,
    validate_invariance,
)
from .profiles import PerturbationLayer, bump_mu, bump_mu_deriv, well_omega, well_omega_deriv

FD_HESS_STEP = 1e-6


@dataclass(frozen=True)
class LocalGradientMap:
    """An equivariant gradient local map f = grad(phi)."""

    group: FiniteGroupRep
    domain: MapDomain | UnionDomain
    potential: Potential
    layers: tuple[PerturbationLayer, ...] = ()
    seed_hints: tuple = ()   # ambient points worth seeding the solver with

    @property
    def dim(self) -> int:
        return self.group.dim

    @property
    def bbox(self) -> float:
        return self.domain.bbox

    def member(self, points: np.ndarray) -> np.ndarray:
        return self.domain.contains(points)

    # -- potential through the layer stack --------------------------------

    def phi(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self._phi_level(pts, len(self.layers))

    def _phi_level(self, pts: np.ndarray, level: int) -> np.ndarray:
        if level == 0:
            return self.potential.value(pts)
        layer = self.layers[level - 1]
        geo = layer.geometry
        dec = geo.decompose(pts)
        inside = geo.in_open_tube(pts, dec)
        out = np.empty(pts.shape[0])
        if np.any(~inside):
            out[~inside] = self._phi_level(pts[~inside], level - 1)
        if np.any(inside):
            x = dec["x"][inside]
            v = dec["v"][inside]
            s = dec["s"][inside]
            eps = layer.epsilon
            mu = bump_mu(s, eps, layer.mu_kind)
            retracted = x + mu[:, None] * v
            out[inside] = self._phi_level(retracted, level - 1) + well_omega(s, eps)
        return out

    def grad(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self._grad_level(pts, len(self.layers))

    def _grad_level(self, pts: np.ndarray, level: int) -> np.ndarray:
        if level == 0:
            return self.potential.grad(pts)
        layer = self.layers[level - 1]
        geo = layer.geometry
        dec = geo.decompose(pts)
        inside = geo.in_open_tube(pts, dec)
        out = np.empty_like(pts)
        if np.any(~inside):
            out[~inside] = self._grad_level(pts[~inside], level - 1)
        if np.any(inside):
            x = dec["x"][inside]
            v = dec["v"][inside]
            s = dec["s"][inside]
            idx = dec["idx"][inside]
            eps = layer.epsilon
            mu = bump_mu(s, eps, layer.mu_kind)
            mud = bump_mu_deriv(s, eps, layer.mu_kind)
            g_below = self._grad_level(x + mu[:, None] * v, level - 1)
            # retraction Jacobian transpose applied to the lower gradient
            proj = np.empty_like(g_below)
            fam = geo.family
            for j in range(fam.count):
                m = idx == j
                if np.any(m):
                    proj[m] = g_below[m] @ fam.projectors[j].T
            normal = g_below - proj
            s_safe = np.where(s > 0, s, 1.0)
            vdotg = np.sum(v * g_below, axis=1)
            radial = (mud / s_safe) * vdotg
            carried = proj + mu[:, None] * normal + radial[:, None] * v
            # well profile contribution along the normal direction
            omega_ratio = np.where(
                s > 0, well_omega_deriv(s, eps) / s_safe, 1.0)
            out[inside] = carried + omega_ratio[:, None] * v
        return out

    def hess(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.layers:
            return self.potential.hess(pts)
        n, d = pts.shape
        out = np.empty((n, d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = FD_HESS_STEP
            out[:, :, j] = (self.grad(pts + e) - self.grad(pts - e)) / (2 * FD_HESS_STEP)
        return 0.5 * (out + np.swapaxes(out, 1, 2))

    # -- structural updates ------------------------------------------------

    def with_layer(self, layer: PerturbationLayer) -> "LocalGradientMap":
        domain = self.domain.without_shell(layer.geometry)
        return replace(self, domain=domain, layers=self.layers + (layer,))

    def with_domain(self, domain) -> "LocalGradientMap":
        return replace(self, domain=domain)

    def scaled(self, lam: float) -> "LocalGradientMap":
        if self.layers:
            raise NotInvariant("scale the base potential before perturbing")
        return replace(self, potential=scale_potential(self.potential, lam))

    def descriptor(self) -> dict:
        from .serialize import map_descriptor  # local import to avoid a cycle
        return map_descriptor(self)


def make_map(group: FiniteGroupRep, domain: MapDomain, potential: Potential,
             validate: bool = True) -> LocalGradientMap:
    """Wire a validated gradient local map with an empty layer stack."""
    if validate:
        sample_filter = domain.contains
        validate_invariance(potential, group, domain.bbox,
                            sample_filter=sample_filter)
        validate_gradient_consistency(potential, domain.bbox,
                                      sample_filter=sample_filter)
        _dom_invariance(domain.expr, group, domain.bbox)
    return LocalGradientMap(group, domain, potential)


def evaluate(f: LocalGradientMap, point) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian at a single domain point."""
    pt = np.asarray(point, dtype=float)[None]
    if not f.member(pt)[0]:
        raise OutsideDomain(f"point {point} outside the map domain")
    return float(f.phi(pt)[0]), f.grad(pt)[0], f.hess(pt)[0]


def equivariance_residual(f: LocalGradientMap, n_samples: int = 200,
                          seed: int = 17) -> float:
    """Max of |grad(gx) - g grad(x)| over sampled domain points and elements."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-f.bbox, f.bbox, size=(8 * n_samples, f.dim))
    pts = pts[f.member(pts)][:n_samples]
    if len(pts) == 0:
        return 0.0
    base = f.grad(pts)
    worst = 0.0
    for g in range(f.group.order):
        moved_pts = f.group.apply(g, pts)
        ok = f.member(moved_pts)
        if not np.any(ok):
            continue
        moved = f.grad(moved_pts[ok])
        expected = base[ok] @ f.group.elements[g].T
        worst = max(worst, float(np.max(np.linalg.norm(moved - expected, axis=1))))
    return worst


# ---------------------------------------------------------------------------
# stratum restriction


class StratumField:
    """A map restricted to a stratum chart, in stratum coordinates."""

    def __init__(self, f: LocalGradientMap, stratum):
        self.map = f
        self.stratum = stratum
        self.basis = stratum.basis

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def ambient(self, coords: np.ndarray) -> np.ndarray:
        return np.atleast_2d(coords) @ self.basis.T

    def value(self, coords: np.ndarray) -> np.ndarray:
        return self.map.phi(self.ambient(coords))

    def grad(self, coords: np.ndarray) -> np.ndarray:
        return self.map.grad(self.ambient(coords)) @ self.basis

    def hess(self, coords: np.ndarray) -> np.ndarray:
        h = self.map.hess(self.ambient(coords))
        return np.einsum("ak,nab,bl->nkl", self.basis, h, self.basis)

    def member(self, coords: np.ndarray) -> np.ndarray:
        return self.map.member(self.ambient(coords))

    def boundary_distance(self, coords: np.ndarray) -> np.ndarray:
        return self.map.domain.boundary_distance(self.ambient(coords))

    def tangency_residual(self, coords: np.ndarray) -> float:
        """Norm of the gradient component normal to the stratum (should be 0)."""
        amb = self.ambient(coords)
        g = self.map.grad(amb)
        tangential = (g @ self.basis) @ self.basis.T
        return float(np.max(np.linalg.norm(g - tangential, axis=1)))


def restrict_to_stratum(f: LocalGradientMap, stratum) -> StratumField:
    return StratumField(f, stratum)


# ---------------------------------------------------------------------------
# disjoint unions


def disjoint_union(f: LocalGradientMap, g: LocalGradientMap,
                   n_samples: int = 2000, seed: int = 23) -> LocalGradientMap:
    """Union of two maps with disjoint domains over the same action."""
    if f.group is not g.group and f.group.order != g.group.order:
        raise DomainsOverlap("maps live over different groups")
    if f.layers or g.layers:
        raise DomainsOverlap("take unions before perturbing")
    rng = np.random.default_rng(seed)
    bbox = max(f.bbox, g.bbox)
    pts = rng.uniform(-bbox, bbox, size=(n_samples, f.dim))
    both = f.member(pts) & g.member(pts)
    if np.any(both):
        raise DomainsOverlap(
            f"domains overlap near {pts[np.nonzero(both)[0][0]].tolist()}")
    for probe_map, other in ((f, g), (g, f)):
        inner = rng.uniform(-probe_map.bbox, probe_map.bbox,
                            size=(n_samples, f.dim))
        inner = inner[probe_map.member(inner)]
        if len(inner) and np.any(other.member(inner)):
            raise DomainsOverlap("domains overlap on interior samples")

    f_parts = f.domain.parts if isinstance(f.domain, UnionDomain) else [f.domain]
    g_parts = g.domain.parts if isinstance(g.domain, UnionDomain) else [g.domain]
    union_domain = UnionDomain(f_parts + g_parts)

    pieces = []
    for src in (f, g):
        if isinstance(src.potential, PiecewisePotential):
            pieces.extend(src.potential.pieces)
        else:
            pieces.append((src.domain, src.potential))
    potential = PiecewisePotential(pieces)
    return LocalGradientMap(f.group, union_domain, potential,
                            seed_hints=f.seed_hints + g.seed_hints)


def empty_map(group: FiniteGroupRep, bbox: float = 1.0) -> LocalGradientMap:
    """The natural base point: a map with empty domain."""
    from .domains import ball
    from .potentials import PolynomialPotential
    dom = MapDomain(ball(0.0), bbox)
    pot = PolynomialPotential({}, group.dim)
    return LocalGradientMap(group, dom, pot)
