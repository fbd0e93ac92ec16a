"""Tube selection, the perturbation family, and the induced map splits.

Around the zeros of a map on the current maximal stratum we grow an
invariant neighbourhood U (balls of radius rho around marked grid cells and
their group images) and pick the tube radius epsilon by halving until three
sampled conditions hold: the tube stays in the map domain, the field is
bounded away from zero on the lateral shell, and the normal decomposition is
unambiguous.  The perturbed map replaces the potential on the tube by its
value at the retracted base point plus the well profile; the one-parameter
family interpolating from the identity is exposed for verification.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import StratumExclusion
from .errors import PartitionViolation, TubeSelectionFailed
from .maps import LocalGradientMap
from .params import Numerics
from .profiles import (
    PerturbationLayer,
    bump_mu,
    bump_mu_deriv,
    well_omega,
    well_omega_deriv,
)
from .strata import Stratum, singular_family
from .tubes import SubspaceFamily, TubeGeometry, TubeSpec


@dataclass
class ClassGeometry:
    """Subspace data of one orbit type, independent of any grid."""

    class_id: int
    family: SubspaceFamily
    point_stratum: bool
    singular: SubspaceFamily | None

    @classmethod
    def for_class(cls, group, class_id: int) -> "ClassGeometry":
        lat = group.lattice
        rec = lat.records[class_id]
        bases = lat.conjugate_bases(class_id)
        return cls(class_id=class_id,
                   family=SubspaceFamily(bases),
                   point_stratum=rec.fixed_dim == 0,
                   singular=singular_family(group, class_id))

    def exclusion(self) -> StratumExclusion:
        return StratumExclusion(self.class_id, self.family)


def _orbit_closure(group, points: np.ndarray) -> np.ndarray:
    """Group images of a point set, deduplicated."""
    if len(points) == 0:
        return points
    images = np.concatenate([points @ group.elements[g].T
                             for g in range(group.order)], axis=0)
    keep: list[np.ndarray] = []
    for p in images:
        if not any(np.max(np.abs(p - q)) <= 1e-9 for q in keep):
            keep.append(p)
    order = np.lexsort(np.array(keep).T[::-1])
    return np.array(keep)[order]


def select_tube(f: LocalGradientMap, geom: ClassGeometry,
                zero_points: np.ndarray, num: Numerics,
                stratum: Stratum | None = None) -> TubeSpec:
    """Choose (U, epsilon) around the stratum zeros of the map.

    ``zero_points`` are ambient zeros of f on the representative subspace;
    the invariant U is the union of stratum balls of radius rho around their
    group closure (or the origin itself for a point stratum).  Starting from
    rho = epsilon = 2h, both radii are halved together until the three tube
    validations pass: the tube stays inside the map domain, the field is
    bounded away from zero on the lateral shell, and the normal projection
    is unambiguous throughout the tube.
    """
    group = f.group
    h = num.grid_h
    if geom.point_stratum:
        origin = np.zeros((1, group.dim))
        has_zero = (f.member(origin)[0]
                    and np.linalg.norm(f.grad(origin)[0]) <= num.zero_thresh)
        centers = origin if has_zero else np.empty((0, group.dim))
        rho0 = 2 * h
    else:
        if stratum is None:
            raise TubeSelectionFailed("positive-dimensional tube needs a stratum")
        centers = _orbit_closure(group, np.atleast_2d(zero_points)
                                 if len(zero_points) else zero_points)
        rho0 = 2 * h
        if len(centers) and geom.singular is not None:
            clearance = float(np.min(geom.singular.min_distance(centers)))
            rho0 = min(rho0, 0.9 * clearance)

    if len(centers) == 0:
        return TubeSpec(geom.class_id, np.empty((0, group.dim)), rho0, 0.0,
                        point_stratum=geom.point_stratum)

    rng = np.random.default_rng(np.random.SeedSequence([num.seed, 101, geom.class_id]))
    rho = eps = rho0
    for _ in range(num.max_halvings):
        spec = TubeSpec(geom.class_id, centers, rho, eps,
                        point_stratum=geom.point_stratum)
        geo = TubeGeometry(geom.family, spec)
        ok, margin = _validate_tube(f, geo, num, rng)
        if ok:
            return TubeSpec(geom.class_id, centers, rho, eps,
                            point_stratum=geom.point_stratum, margin=margin)
        rho /= 2
        eps /= 2
    raise TubeSelectionFailed(
        f"no epsilon validated after {num.max_halvings} halvings "
        f"(class {geom.class_id}); shrink grid_h or enlarge the domain")


def _validate_tube(f, geo: TubeGeometry, num: Numerics, rng) -> tuple[bool, float]:
    tube_pts = geo.sample_tube(500, rng)
    if len(tube_pts) == 0:
        return False, 0.0
    if not np.all(f.member(tube_pts)):
        return False, 0.0
    gaps = geo.decompose(tube_pts)["gap"]
    if np.any(gaps <= geo.spec.epsilon / 10.0):
        return False, 0.0
    shell_pts = geo.sample_shell(500, rng)
    if len(shell_pts) == 0:
        return True, float("inf")  # empty lateral boundary
    margin = float(np.min(np.linalg.norm(f.grad(shell_pts), axis=1)))
    if margin <= num.zero_thresh:
        return False, margin
    return True, margin


# ---------------------------------------------------------------------------
# perturbation and family


class HomotopyFamily:
    """The interpolation from the identity to the perturbed map.

    ``grad_at(t, pts)`` evaluates the gradient of the interpolated potential:
    retraction toward the stratum during the first half, then the well
    profile is switched on during the second half.  The section at t=0 is the
    original map off the lateral shell; the section at t=1 is the perturbed
    map.
    """

    def __init__(self, base: LocalGradientMap, layer: PerturbationLayer):
        self.base = base
        self.layer = layer
        self.domain = base.domain.without_shell(layer.geometry)

    def phi_at(self, t: float, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        geo = self.layer.geometry
        dec = geo.decompose(pts)
        inside = geo.in_open_tube(pts, dec)
        out = np.empty(pts.shape[0])
        if np.any(~inside):
            out[~inside] = self.base.phi(pts[~inside])
        if np.any(inside):
            x, v, s = dec["x"][inside], dec["v"][inside], dec["s"][inside]
            eps = self.layer.epsilon
            if t <= 0.5:
                mu_t = 2 * t * bump_mu(s, eps, self.layer.mu_kind) + (1 - 2 * t)
                out[inside] = self.base.phi(x + mu_t[:, None] * v)
            else:
                mu1 = bump_mu(s, eps, self.layer.mu_kind)
                out[inside] = (self.base.phi(x + mu1[:, None] * v)
                               + (2 * t - 1) * well_omega(s, eps))
        return out

    def grad_at(self, t: float, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        geo = self.layer.geometry
        dec = geo.decompose(pts)
        inside = geo.in_open_tube(pts, dec)
        out = np.empty_like(pts)
        if np.any(~inside):
            out[~inside] = self.base.grad(pts[~inside])
        if np.any(inside):
            x, v, s = dec["x"][inside], dec["v"][inside], dec["s"][inside]
            idx = dec["idx"][inside]
            eps = self.layer.epsilon
            kind = self.layer.mu_kind
            if t <= 0.5:
                mu_t = 2 * t * bump_mu(s, eps, kind) + (1 - 2 * t)
                mu_t_d = 2 * t * bump_mu_deriv(s, eps, kind)
                omega_part = np.zeros_like(s)
            else:
                mu_t = bump_mu(s, eps, kind)
                mu_t_d = bump_mu_deriv(s, eps, kind)
                omega_part = (2 * t - 1) * well_omega_deriv(s, eps)
            g_below = self.base.grad(x + mu_t[:, None] * v)
            proj = np.empty_like(g_below)
            fam = geo.family
            for j in range(fam.count):
                m = idx == j
                if np.any(m):
                    proj[m] = g_below[m] @ fam.projectors[j].T
            normal = g_below - proj
            s_safe = np.where(s > 0, s, 1.0)
            radial = (mu_t_d / s_safe) * np.sum(v * g_below, axis=1)
            carried = proj + mu_t[:, None] * normal + radial[:, None] * v
            ratio = np.where(s > 0, omega_part / s_safe, 0.0)
            out[inside] = carried + ratio[:, None] * v
        return out

    def retracted(self, t: float, points: np.ndarray) -> np.ndarray:
        """r_{2t}(z) for t <= 1/2, r_1(z) beyond (identity off the tube)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        geo = self.layer.geometry
        dec = geo.decompose(pts)
        inside = geo.in_open_tube(pts, dec)
        out = pts.copy()
        if np.any(inside):
            s = dec["s"][inside]
            eps = self.layer.epsilon
            tt = min(2 * t, 1.0)
            mu_t = tt * bump_mu(s, eps, self.layer.mu_kind) + (1 - tt)
            out[inside] = dec["x"][inside] + mu_t[:, None] * dec["v"][inside]
        return out


def perturb(f: LocalGradientMap, geom: ClassGeometry, tube: TubeSpec,
            mu_kind: str = "cubic") -> tuple[LocalGradientMap, HomotopyFamily]:
    """Append the tube layer; returns the perturbed map and its family.

    An empty tube is a no-op layer: the perturbed map equals f (the domain
    still shrinks only when the split removes the stratum).
    """
    geo = TubeGeometry(geom.family, tube)
    layer = PerturbationLayer(geo, mu_kind)
    if tube.is_empty:
        return f, HomotopyFamily(f, layer)
    return f.with_layer(layer), HomotopyFamily(f, layer)


@dataclass(frozen=True)
class SplitParts:
    """The three restrictions of a perturbed map."""

    core: LocalGradientMap          # restriction to the inner third tube
    off_stratum: LocalGradientMap   # restriction off the stratum subspaces
    trimmed: LocalGradientMap       # off_stratum minus the closed inner tube


def split(f_pert: LocalGradientMap, geom: ClassGeometry,
          tube: TubeSpec) -> SplitParts:
    """Restrict the perturbed map to its normal core, complement and trim.

    The complement removes the full conjugate subspaces; for the maximal
    orbit type of the current domain this coincides with removing the
    stratum.
    """
    geo = TubeGeometry(geom.family, tube)
    exclusion = geom.exclusion()
    off = f_pert.with_domain(f_pert.domain.without_stratum(exclusion))
    if tube.is_empty:
        return SplitParts(core=f_pert.with_domain(
                              f_pert.domain.restricted_to_tube(geo, 1.0 / 3)),
                          off_stratum=off, trimmed=off)
    core = f_pert.with_domain(f_pert.domain.restricted_to_tube(geo, 1.0 / 3))
    trimmed = off.with_domain(off.domain.without_closed_tube(geo, 1.0 / 3))
    return SplitParts(core=core, off_stratum=off, trimmed=trimmed)


# ---------------------------------------------------------------------------
# partition verification


def verify_partition(family: HomotopyFamily, n_samples: int = 1000,
                     seed: int = 29, zero_thresh: float = 1e-8) -> dict:
    """Sample the four time-tube regions and check the zero characterizations.

    Region A (t in [0,1/2], tube): the family vanishes exactly where the
    original map vanishes at the retracted point.  Region B (t in [1/2,1],
    outer tube shell): same with the full retraction.  Region C (t in
    [1/2,1], inner tube off the base): the family never vanishes; the minimum
    sampled magnitude is reported as the region margin.  Region D (the base
    itself): the family equals the map pointwise.
    """
    geo = family.layer.geometry
    spec = geo.spec
    if spec.is_empty:
        return {"empty_tube": True, "violations": 0}
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    eps = spec.epsilon
    report = {"empty_tube": False, "violations": 0, "margin_C": float("inf"),
              "checked": {}}

    kind = family.layer.mu_kind

    def iff_violations(h, fr, s, t_arr):
        """Zero-set disagreement beyond the retraction Jacobian bounds.

        With h = Dr^T f(r) and sigma the extreme singular values of Dr, a
        sample only counts as a violation when the thresholded zero flags
        disagree in a way the bounds sigma_min |f| <= |h| <= sigma_max |f|
        cannot explain.
        """
        tt = np.minimum(2 * t_arr, 1.0)
        mu_t = tt * bump_mu(s, eps, kind) + (1 - tt)
        mu_t_d = tt * bump_mu_deriv(s, eps, kind)
        radial = mu_t + mu_t_d * s
        sig_min = np.minimum(1.0, np.minimum(mu_t, radial))
        sig_max = np.maximum(1.0, np.maximum(mu_t, radial))
        hn = np.linalg.norm(h, axis=1)
        fn = np.linalg.norm(fr, axis=1)
        h_zero = hn <= zero_thresh
        f_zero = fn <= zero_thresh
        bad_h = h_zero & (fn > zero_thresh / np.maximum(sig_min, 1e-300))
        bad_f = f_zero & (hn > zero_thresh * sig_max)
        return int(np.sum(bad_h | bad_f))

    # region A
    pts = geo.sample_tube(n_samples, rng)
    dec_a = geo.decompose(pts)
    ts = np.round(rng.uniform(0.0, 0.5, size=len(pts)), 3)
    bad = 0
    for t in np.unique(ts):
        sel = ts == t
        h = family.grad_at(float(t), pts[sel])
        fr = family.base.grad(family.retracted(float(t), pts[sel]))
        bad += iff_violations(h, fr, dec_a["s"][sel], np.full(int(sel.sum()), t))
    report["checked"]["A"] = len(pts)
    report["violations"] += bad

    # region B: outer shell 2eps/3 <= s < eps
    pts = geo.sample_tube(4 * n_samples, rng)
    dec = geo.decompose(pts)
    sel = dec["s"] >= 2 * eps / 3
    pts_b = pts[sel][:n_samples]
    if len(pts_b):
        t = float(rng.uniform(0.5, 1.0))
        h = family.grad_at(t, pts_b)
        fr = family.base.grad(family.retracted(0.5, pts_b))
        report["violations"] += iff_violations(
            h, fr, dec["s"][sel][:n_samples], np.full(len(pts_b), t))
    report["checked"]["B"] = len(pts_b)

    # region C: inner tube off the base, 0 < s < 2eps/3; the family can
    # legitimately vanish on the t = 1/2 face over base zeros, so the open
    # time interval is sampled
    pts = geo.sample_tube(4 * n_samples, rng)
    dec = geo.decompose(pts)
    sel = (dec["s"] > 0) & (dec["s"] < 2 * eps / 3)
    pts_c = pts[sel][:n_samples]
    if len(pts_c):
        ts = np.round(rng.uniform(0.501, 1.0, size=len(pts_c)), 3)
        mins = np.empty(len(pts_c))
        for t in np.unique(ts):
            m = ts == t
            mins[m] = np.linalg.norm(family.grad_at(float(t), pts_c[m]), axis=1)
        margin = float(np.min(mins))
        report["margin_C"] = margin
        if margin <= 0.0:
            report["violations"] += int(np.sum(mins <= 0.0))
    report["checked"]["C"] = len(pts_c)

    # region D: the base set U itself
    base_pts = _sample_base(geo, n_samples, rng)
    if len(base_pts):
        t = float(rng.uniform(0.5, 1.0))
        h = family.grad_at(t, base_pts)
        fv = family.base.grad(base_pts)
        gap = np.linalg.norm(h - fv, axis=1)
        tol = 1e-12 * (1.0 + np.linalg.norm(fv, axis=1))
        report["violations"] += int(np.sum(gap > tol))
        report["region_D_max_gap"] = float(np.max(gap))
    report["checked"]["D"] = len(base_pts)

    if report["violations"]:
        raise PartitionViolation(f"{report['violations']} region violations: {report}")
    return report


def _sample_base(geo: TubeGeometry, n: int, rng) -> np.ndarray:
    spec = geo.spec
    if spec.is_empty:
        return np.empty((0, geo.family.dim))
    if spec.point_stratum:
        return np.zeros((n, geo.family.dim))
    out = []
    centers = spec.centers
    attempts = 0
    while len(out) < n and attempts < 200 * n:
        attempts += 1
        c = centers[rng.integers(0, len(centers))]
        dec = geo.decompose(c[None])
        j = int(dec["idx"][0])
        b = geo.family.bases[j]
        u = rng.normal(size=b.shape[1])
        r = rng.uniform(0, spec.rho)
        x = c + (b @ u) * (r / (np.linalg.norm(u) + 1e-300))
        dec2 = geo.decompose(x[None])
        if dec2["dcen"][0] < spec.rho:
            out.append(x)
    return np.array(out) if out else np.empty((0, geo.family.dim))
