"""Descriptors for maps and their parts: JSON-able, evaluation-exact.

Floats survive a JSON round trip exactly (repr-based encoding), so a
reconstructed map reproduces values bit-for-bit; the round-trip test pins
that at 1e-12.
"""
from __future__ import annotations

import numpy as np

from .domains import (
    BallUnionRegion,
    ClosedSetSpec,
    MapDomain,
    StratumExclusion,
    UnionDomain,
    expr_from_config,
    expr_to_config,
)
from .errors import ConfigError
from .maps import LocalGradientMap
from .potentials import PiecewisePotential, potential_from_descriptor
from .profiles import PerturbationLayer
from .tubes import SubspaceFamily, TubeGeometry, TubeSpec


def tube_descriptor(geo: TubeGeometry) -> dict:
    spec = geo.spec
    return {
        "bases": [b.tolist() for b in geo.family.bases],
        "class_id": spec.class_id,
        "centers": spec.centers.tolist(),
        "rho": spec.rho,
        "epsilon": spec.epsilon,
        "point_stratum": spec.point_stratum,
        "margin": None if spec.margin == float("inf") else spec.margin,
    }


def tube_from_descriptor(desc: dict) -> TubeGeometry:
    fam = SubspaceFamily([np.array(b) for b in desc["bases"]])
    margin = desc.get("margin")
    spec = TubeSpec(desc["class_id"], np.array(desc["centers"]).reshape(-1, fam.dim),
                    desc["rho"], desc["epsilon"],
                    point_stratum=desc["point_stratum"],
                    margin=float("inf") if margin is None else margin)
    return TubeGeometry(fam, spec)


def domain_descriptor(domain) -> dict:
    if isinstance(domain, UnionDomain):
        return {"kind": "union_domain",
                "parts": [domain_descriptor(p) for p in domain.parts]}
    out = {
        "kind": "map_domain",
        "expr": expr_to_config(domain.expr),
        "bbox": domain.bbox,
        "excluded_strata": [
            {"class_id": e.class_id, "bases": [b.tolist() for b in e.family.bases]}
            for e in domain.excluded_strata],
        "excluded_shells": [tube_descriptor(g) for g in domain.excluded_shells],
        "excluded_closed_tubes": [
            {"tube": tube_descriptor(g), "scale": s}
            for g, s in domain.excluded_closed_tubes],
        "excluded_sets": [
            {"centers": c.centers.tolist(), "radius": c.radius}
            for c in domain.excluded_sets],
    }
    if domain.ball_restriction is not None:
        out["ball_restriction"] = {
            "centers": domain.ball_restriction.centers.tolist(),
            "radius": domain.ball_restriction.radius}
    if domain.tube_restriction is not None:
        out["tube_restriction"] = tube_descriptor(domain.tube_restriction)
        out["tube_restriction_scale"] = domain.tube_restriction_scale
    return out


def domain_from_descriptor(desc: dict):
    if desc["kind"] == "union_domain":
        return UnionDomain([domain_from_descriptor(p) for p in desc["parts"]])
    if desc["kind"] != "map_domain":
        raise ConfigError(f"unknown domain descriptor {desc['kind']!r}")
    ball = None
    if "ball_restriction" in desc:
        br = desc["ball_restriction"]
        ball = BallUnionRegion(np.array(br["centers"]), br["radius"])
    tube = None
    scale = 1.0
    if "tube_restriction" in desc:
        tube = tube_from_descriptor(desc["tube_restriction"])
        scale = desc["tube_restriction_scale"]
    return MapDomain(
        expr=expr_from_config(desc["expr"]),
        bbox=desc["bbox"],
        ball_restriction=ball,
        tube_restriction=tube,
        tube_restriction_scale=scale,
        excluded_strata=tuple(
            StratumExclusion(e["class_id"],
                             SubspaceFamily([np.array(b) for b in e["bases"]]))
            for e in desc["excluded_strata"]),
        excluded_shells=tuple(tube_from_descriptor(d)
                              for d in desc["excluded_shells"]),
        excluded_closed_tubes=tuple(
            (tube_from_descriptor(d["tube"]), d["scale"])
            for d in desc["excluded_closed_tubes"]),
        excluded_sets=tuple(
            ClosedSetSpec(np.array(e["centers"]), e["radius"])
            for e in desc["excluded_sets"]),
    )


def potential_descriptor(pot, domain) -> dict:
    if isinstance(pot, PiecewisePotential):
        return {"kind": "piecewise",
                "pieces": [{"domain": domain_descriptor(d),
                            "potential": p.descriptor()}
                           for d, p in pot.pieces]}
    return pot.descriptor()


def potential_from_full_descriptor(desc: dict):
    if desc.get("kind") == "piecewise":
        pieces = [(domain_from_descriptor(p["domain"]),
                   potential_from_descriptor(p["potential"]))
                  for p in desc["pieces"]]
        return PiecewisePotential(pieces)
    return potential_from_descriptor(desc)


def map_descriptor(f: LocalGradientMap) -> dict:
    return {
        "schema": "egdeg/1",
        "domain": domain_descriptor(f.domain),
        "potential": potential_descriptor(f.potential, f.domain),
        "layers": [{"tube": tube_descriptor(layer.geometry),
                    "mu_kind": layer.mu_kind} for layer in f.layers],
        "seed_hints": [list(h) for h in f.seed_hints],
    }


def map_from_descriptor(desc: dict, group) -> LocalGradientMap:
    layers = tuple(
        PerturbationLayer(tube_from_descriptor(l["tube"]), l["mu_kind"])
        for l in desc["layers"])
    return LocalGradientMap(
        group=group,
        domain=domain_from_descriptor(desc["domain"]),
        potential=potential_from_full_descriptor(desc["potential"]),
        layers=layers,
        seed_hints=tuple(tuple(h) for h in desc.get("seed_hints", [])),
    )
