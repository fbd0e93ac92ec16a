"""Command line interface: strata | theta | degree | perturb-trace | verify.

Math inputs come from a single JSON config; flags cover only paths, suites
and verbosity.  Exit codes: 0 success, 2 validation, 3 numerics failure,
4 verification failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import degree as dg
from .config import RunConfig, canonical_json, load_config, potential_from_block
from .domains import MapDomain, validate_invariance
from .errors import (
    ConfigError,
    DegenerateUnresolved,
    DivisibilityViolation,
    EgdegError,
    MarginTooSmall,
    NotInvariant,
    NotOrthogonal,
    RefinementOverflow,
    ResolutionTooCoarse,
    TubeSelectionFailed,
    UnknownName,
)
from .factory import catalog
from .groups import CircleRep
from .maps import make_map, restrict_to_stratum
from .perturb import ClassGeometry, perturb, select_tube, verify_partition
from .strata import build_stratum, iso_types
from .theta import theta, theta_radial_s1

VALIDATION_ERRORS = (ConfigError, NotInvariant, NotOrthogonal, UnknownName,
                     FileNotFoundError, KeyError, ValueError)
NUMERIC_ERRORS = (TubeSelectionFailed, DegenerateUnresolved,
                  DivisibilityViolation, ResolutionTooCoarse, MarginTooSmall,
                  RefinementOverflow)


def _emit(payload: dict, output: str | None):
    text = canonical_json(payload)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _build_map(cfg: RunConfig):
    block = cfg.potential_block
    if block.get("kind") == "catalog":
        entry = catalog(block["name"])
        group, omega, f = entry.build()
        num = cfg.numerics.with_(**entry.numerics) if entry.numerics else cfg.numerics
        return entry, group, omega, f, num
    group = cfg.group
    potential = potential_from_block(block, group.dim)
    domain = MapDomain(cfg.domain, cfg.numerics.bbox)
    f = make_map(group, domain, potential)
    return None, group, cfg.domain, f, cfg.numerics


def cmd_strata(args) -> int:
    cfg = load_config(args.config)
    if cfg.is_circle:
        raise ConfigError("strata listing needs a finite group")
    validate_invariance(cfg.domain, cfg.group, cfg.numerics.bbox)
    num = cfg.numerics
    lat = iso_types(cfg.group, cfg.domain, num.grid_h, num.bbox)
    rows = []
    for cid in lat.class_ids:
        rec = cfg.group.lattice.records[cid]
        row = {"orbit_type": cfg.group.lattice.class_label(cid),
               "subgroup_order": rec.order,
               "fixed_dim": rec.fixed_dim,
               "weyl_order": rec.weyl_order}
        if rec.fixed_dim >= 1:
            stratum = build_stratum(cfg.group, cfg.domain, cid, num.grid_h,
                                    num.bbox, num.refinement_check)
            row["components"] = [
                {"label": comp.label_str, "cells": len(comp.cells),
                 "quotient_label": stratum.orbit_of_component(
                     comp.index).quotient_label}
                for comp in stratum.components]
            row["quotient_labels"] = stratum.quotient_labels()
            row["stabilizer_orders"] = {
                str(orb.quotient_label): sorted(set(orb.stabilizer_orders.values()))
                for orb in stratum.quotient_orbits}
        rows.append(row)
    _emit({"schema": "egdeg/1", "orbit_types": rows,
           "linear_order": lat.labels()}, cfg.output or args.output)
    return 0


def cmd_theta(args) -> int:
    cfg = load_config(args.config)
    block = cfg.potential_block
    if cfg.is_circle or (block.get("kind") == "catalog"
                         and catalog(block["name"]).group_kind == "circle"):
        if block.get("kind") == "catalog":
            entry = catalog(block["name"])
            rep = CircleRep((1,))
            coeffs = {int(k): float(v)
                      for k, v in entry.radial_coeffs.items()}
            omega_kind = entry.omega_kind
            num = cfg.numerics
        else:
            rep = cfg.group
            coeffs = {int(k): float(v)
                      for k, v in block.get("coeffs", {}).items()}
            omega_kind = ("punctured"
                          if cfg.domain.kind == "punctured" else "plane")
            num = cfg.numerics
        vec, trace = theta_radial_s1(rep, coeffs, omega_kind, num)
    else:
        entry, group, omega, f, num = _build_map(cfg)
        vec, trace = theta(group, omega, f, num)
    payload = {"schema": "egdeg/1"}
    payload.update(vec.to_json_dict())
    # surface every computed row, zeros included, for the report
    computed = []
    for step in trace.steps:
        label = step["orbit_type"]
        for qlabel, value in step.get("intersection", {}).items():
            computed.append({"orbit_type": label, "component": qlabel,
                             "value": value})
    payload["computed_rows"] = computed
    payload["trace"] = trace.to_json_dict()
    _emit(payload, cfg.output or args.output)
    return 0


def cmd_degree(args) -> int:
    cfg = load_config(args.config)
    if cfg.degree_block is None:
        raise ConfigError("degree subcommand needs a 'degree' block")
    block = cfg.degree_block
    dim = cfg.group.dim if not cfg.is_circle else 2
    potential = potential_from_block(cfg.potential_block, dim)
    field = dg.FieldAdapter(lambda u: potential.grad(u), dim)
    lo = np.array(block["box_lo"], dtype=float)
    hi = np.array(block["box_hi"], dtype=float)
    mode = block.get("mode", "kronecker")
    h = float(block.get("grid_h", cfg.numerics.grid_h))
    if mode == "kronecker":
        value = dg.kronecker_degree(field, lo, hi)
        diagnostics = {"mode": mode}
    elif mode == "intersection":
        region = dg.BoxRegion(lo, hi, h)
        records = dg.find_zeros(field, region, cfg.numerics)
        value = dg.intersection_number(field, region, cfg.numerics,
                                       records=records)
        diagnostics = {
            "mode": mode,
            "zeros": [{"point": list(r.point), "index": r.index}
                      for r in records]}
    else:
        raise ConfigError(f"unknown degree mode {mode!r}")
    _emit({"schema": "egdeg/1", "degree": int(value),
           "diagnostics": diagnostics}, cfg.output or args.output)
    return 0


def cmd_perturb_trace(args) -> int:
    cfg = load_config(args.config)
    entry, group, omega, f, num = _build_map(cfg)
    lat = iso_types(group, omega, num.grid_h, num.bbox)
    layers = []
    f_i = f
    for step, cid in enumerate(lat.class_ids[:-1] or lat.class_ids):
        rec = group.lattice.records[cid]
        geom = ClassGeometry.for_class(group, cid)
        stratum = None
        zeros = np.empty((0, group.dim))
        if rec.fixed_dim >= 1:
            stratum = build_stratum(group, omega, cid, num.grid_h, num.bbox)
            fld = restrict_to_stratum(f_i, stratum)
            pts = []
            for comp in stratum.components:
                for z in dg.find_zeros(fld, dg.GridRegion(stratum, comp), num):
                    pts.append(stratum.to_ambient(np.array(z.point))[0])
            zeros = np.array(pts) if pts else zeros
        tube = select_tube(f_i, geom, zeros, num, stratum)
        f_pert, family = perturb(f_i, geom, tube, num.mu_kind)
        entry_log = {
            "step": step,
            "orbit_type": group.lattice.class_label(cid),
            "centers": tube.centers.tolist(),
            "rho": tube.rho,
            "epsilon": tube.epsilon,
            "shell_margin": None if tube.margin == float("inf") else tube.margin,
        }
        if not tube.is_empty:
            region_report = verify_partition(family, args.samples,
                                             zero_thresh=num.zero_thresh)
            entry_log["regions"] = {
                "checked": region_report["checked"],
                "violations": region_report["violations"],
                "margin_C": region_report.get("margin_C"),
            }
        layers.append(entry_log)
        from .perturb import split as _split
        f_i = _split(f_pert, geom, tube).off_stratum
    _emit({"schema": "egdeg/1", "layers": layers}, cfg.output or args.output)
    return 0


def cmd_verify(args) -> int:
    from .verify import report_lines, run_suite
    from .params import Numerics
    workers = args.workers or Numerics().effective_workers()
    report = run_suite(args.suite, workers=workers)
    text = canonical_json(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    for line in report_lines(report):
        print(line)
    return 0 if report["passed"] else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egdeg",
        description="Degree-type invariants of equivariant gradient local maps")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("strata", cmd_strata), ("theta", cmd_theta),
                     ("degree", cmd_degree)):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to the JSON run config")
        p.add_argument("--output", default=None, help="also write JSON here")
        p.set_defaults(fn=fn)

    p = sub.add_parser("perturb-trace")
    p.add_argument("config")
    p.add_argument("--output", default=None)
    p.add_argument("--samples", type=int, default=500)
    p.set_defaults(fn=cmd_perturb_trace)

    p = sub.add_parser("verify")
    p.add_argument("--suite", choices=["all", "axioms", "degree", "partition"],
                   default="all")
    p.add_argument("--output", default=None)
    p.add_argument("--workers", type=int, default=0)
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print(f"numerics error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except EgdegError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
