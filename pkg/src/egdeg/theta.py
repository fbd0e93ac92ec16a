"""The degree-type invariant: orchestration of the stratum recursion.

Orbit types are processed maximal first.  At a zero-dimensional top type the
invariant records the {0,1} origin slot.  At every positive-dimensional type
the current map is restricted to the stratum chart, the quotient intersection
numbers become the entries of that row, and the map is then perturbed around
its stratum zeros and restricted off the stratum before the next type is
processed.  The circle demo reduces the single-weight rotation action on the
plane to the antipodal line surrogate, whose quotient computation is
literally the same one-dimensional problem.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .degree import GridRegion, find_zeros, intersection_number
from .domains import DomainExpr, full_space, punctured_space
from .errors import AdditionUndefined, ConfigError, DivisibilityViolation, UnsupportedRep
from .groups import CircleRep, FiniteGroupRep, antipodal
from .maps import LocalGradientMap, make_map, restrict_to_stratum
from .params import Numerics
from .perturb import ClassGeometry, perturb, select_tube, split
from .potentials import PolynomialPotential
from .strata import Stratum, build_stratum, iso_types


@dataclass(frozen=True)
class ThetaVector:
    """Sparse integer invariant: one entry per (orbit type, quotient component).

    ``origin_slot`` is the optional {0,1} coordinate present exactly when the
    domain contains the origin and the full group fixes only the origin.
    """

    entries: tuple[tuple[tuple[str, str], int], ...] = ()
    origin_slot: int | None = None

    @classmethod
    def from_dict(cls, entries: dict, origin_slot=None) -> "ThetaVector":
        items = tuple(sorted((k, int(v)) for k, v in entries.items() if v != 0))
        return cls(items, origin_slot)

    def as_dict(self) -> dict:
        return dict(self.entries)

    def entry(self, orbit_type: str, component: str) -> int:
        return self.as_dict().get((orbit_type, component), 0)

    @property
    def is_zero(self) -> bool:
        return not self.entries and (self.origin_slot in (None, 0))

    def to_json_dict(self) -> dict:
        return {
            "theta11": self.origin_slot,
            "entries": [{"orbit_type": k[0], "component": k[1], "value": v}
                        for k, v in self.entries],
        }

    def __str__(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def theta_add(a: ThetaVector, b: ThetaVector) -> ThetaVector:
    """Entrywise sum; origin slots may not both be set to one."""
    if (a.origin_slot is None) != (b.origin_slot is None):
        raise ConfigError("incompatible key spaces: origin slot present on one side")
    out = a.as_dict()
    for k, v in b.entries:
        out[k] = out.get(k, 0) + v
    slot = None
    if a.origin_slot is not None:
        if a.origin_slot == 1 and b.origin_slot == 1:
            raise AdditionUndefined("both origin slots are one; sum undefined")
        slot = max(a.origin_slot, b.origin_slot)
    return ThetaVector.from_dict(out, slot)


@dataclass
class RecursionTrace:
    """Step log of the stratum recursion, for diagnostics and reporting."""

    steps: list[dict] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {"steps": self.steps}


def _compact_margin(f: LocalGradientMap, h: float) -> float:
    # tube-born zeros sit a third of the tube radius away from the trimmed
    # core, so the compact-support filter must stay below that
    eps = [layer.epsilon for layer in f.layers if not layer.spec.is_empty]
    if not eps:
        return h
    return min(h, 0.25 * min(eps))


def _stratum_zero_pass(f: LocalGradientMap, stratum: Stratum, num: Numerics):
    """Zeros of the restricted field per component, plus ambient positions."""
    fld = restrict_to_stratum(f, stratum)
    margin = _compact_margin(f, num.grid_h)
    hints = None
    if f.seed_hints:
        pts = np.array(f.seed_hints, dtype=float)
        proj = pts @ stratum.basis @ stratum.basis.T
        on = np.linalg.norm(pts - proj, axis=1) <= 1e-9 * (1 + np.linalg.norm(pts, axis=1))
        hints = (pts[on] @ stratum.basis) if np.any(on) else None
    per_component = {}
    ambient = []
    for comp in stratum.components:
        region = GridRegion(stratum, comp)
        extra = None
        if hints is not None and len(hints):
            keep = region.contains(hints)
            extra = hints[keep] if np.any(keep) else None
        recs = find_zeros(fld, region, num, compact_margin=margin,
                          extra_seeds=extra)
        per_component[comp.index] = recs
        for r in recs:
            ambient.append(stratum.to_ambient(np.array(r.point))[0])
    ambient = np.array(ambient) if ambient else np.empty((0, f.dim))
    return fld, per_component, ambient, margin


def theta(group: FiniteGroupRep, omega: DomainExpr, f: LocalGradientMap,
          num: Numerics,
          strata_cache: dict | None = None) -> tuple[ThetaVector, RecursionTrace]:
    """Full invariant of a gradient local map over the given domain."""
    lat = iso_types(group, omega, num.grid_h, num.bbox)
    strata: dict[int, Stratum] = {}
    for cid in lat.class_ids:
        if group.lattice.records[cid].fixed_dim >= 1:
            key = ("stratum", id(group), str(omega), cid, num.grid_h, num.bbox)
            if strata_cache is not None and key in strata_cache:
                strata[cid] = strata_cache[key]
            else:
                strata[cid] = build_stratum(group, omega, cid, num.grid_h,
                                            num.bbox, num.refinement_check)
                if strata_cache is not None:
                    strata_cache[key] = strata[cid]

    entries: dict[tuple[str, str], int] = {}
    origin_slot = None
    trace = RecursionTrace()
    f_i = f
    n_classes = len(lat.class_ids)

    for step, cid in enumerate(lat.class_ids):
        rec = group.lattice.records[cid]
        label = group.lattice.class_label(cid)
        geom = ClassGeometry.for_class(group, cid)
        step_log: dict = {"step": step, "orbit_type": label,
                          "fixed_dim": rec.fixed_dim}

        if rec.fixed_dim == 0:
            origin = np.zeros((1, group.dim))
            origin_slot = 1 if bool(f_i.member(origin)[0]) else 0
            step_log["theta11"] = origin_slot
            stratum = None
            zero_pts = np.empty((0, group.dim))
        else:
            stratum = strata[cid]
            fld, per_component, zero_pts, margin = _stratum_zero_pass(
                f_i, stratum, num)
            step_log["zeros"] = {
                stratum.components[i].label_str: len(rs)
                for i, rs in per_component.items() if rs}
            step_log["compact_margin"] = margin
            values = {}
            for orb in stratum.quotient_orbits:
                rep_idx = min(orb.members,
                              key=lambda i: stratum.components[i].label)
                region = GridRegion(stratum, stratum.components[rep_idx])
                total = intersection_number(
                    fld, region, num, records=per_component[rep_idx],
                    compact_margin=margin)
                stab = orb.stabilizer_orders[rep_idx]
                if total % stab != 0:
                    raise DivisibilityViolation(
                        f"step {step} ({label}): count {total} not divisible "
                        f"by stabilizer {stab}")
                value = total // stab
                values[orb.quotient_label] = value
                if value != 0:
                    entries[(label, orb.quotient_label)] = value
            step_log["intersection"] = values

        if step < n_classes - 1:
            tube = select_tube(f_i, geom, zero_pts, num, stratum)
            f_pert, _family = perturb(f_i, geom, tube, num.mu_kind)
            parts = split(f_pert, geom, tube)
            f_next = parts.off_stratum
            step_log["tube"] = {
                "centers": int(tube.centers.shape[0]),
                "rho": tube.rho,
                "epsilon": tube.epsilon,
                "margin": None if tube.margin == float("inf") else tube.margin,
            }
            _assert_domain_shrinks(f_i, f_next, num)
            f_i = f_next
        trace.steps.append(step_log)

    return ThetaVector.from_dict(entries, origin_slot), trace


def _assert_domain_shrinks(f_prev, f_next, num: Numerics, n: int = 100):
    rng = np.random.default_rng(np.random.SeedSequence([num.seed, 71]))
    pts = rng.uniform(-num.bbox, num.bbox, size=(20 * n, f_prev.dim))
    inside = pts[f_next.member(pts)][:n]
    if len(inside) and not np.all(f_prev.member(inside)):
        raise ConfigError("recursion domain grew; internal bookkeeping error")


# ---------------------------------------------------------------------------
# circle demo


def theta_radial_s1(rep: CircleRep, radial_coeffs: dict[int, float],
                    omega_kind: str, num: Numerics,
                    strata_cache: dict | None = None) -> tuple[ThetaVector, RecursionTrace]:
    """Invariant of a rotation-invariant gradient map on the plane.

    ``radial_coeffs`` give the potential as a polynomial in the squared
    radius.  Only a single nonzero weight with no trivial block is supported;
    the rotation quotient reduces the computation to the antipodal action on
    the line with the even surrogate potential, computed by the standard
    machinery, and the row is relabeled to the cyclic isotropy type.
    """
    if len(rep.weights) != 1 or rep.trivial_dim != 0:
        raise UnsupportedRep("demo path supports weights=[k], trivial_dim=0")
    k = abs(rep.weights[0])
    if omega_kind == "plane":
        omega = full_space()
    elif omega_kind == "punctured":
        omega = punctured_space()
    else:
        raise ConfigError(f"omega_kind must be plane or punctured, got {omega_kind!r}")

    surrogate_terms = {(2 * power,): coeff
                       for power, coeff in radial_coeffs.items() if coeff != 0.0}
    group = antipodal(1)
    pot = PolynomialPotential(surrogate_terms, 1)
    from .domains import MapDomain
    dom = MapDomain(omega, num.bbox)
    f = make_map(group, dom, pot)
    vec, trace = theta(group, omega, f, num, strata_cache=strata_cache)
    relabeled = {(f"(Z{k})", comp): val
                 for (label, comp), val in vec.entries}
    return ThetaVector.from_dict(relabeled, vec.origin_slot), trace
