"""Degree machinery tests: zero finding, boundary degrees, cross-oracles."""
import numpy as np
import pytest

from oracles import circle_winding, quotient_orbit_count

from egdeg import degree as dg
from egdeg import domains as dm
from egdeg import groups as gr
from egdeg import maps as mp
from egdeg import potentials as pt
from egdeg.errors import DimensionUnsupported, MarginTooSmall
from egdeg.params import Numerics
from egdeg.strata import build_stratum, iso_types

NUM = Numerics(grid_h=0.15, bbox=3.0)


def poly_field(expr, dim):
    p = pt.PolynomialPotential.from_expression(expr, dim)
    return dg.FieldAdapter(lambda u: p.grad(u), dim), p


class TestFindZeros:
    def test_single_parabola_zero(self):
        fld, _ = poly_field("0.5*x1^2", 1)
        region = dg.BoxRegion([-1.0], [1.0], 0.1)
        recs = dg.find_zeros(fld, region, NUM)
        assert len(recs) == 1
        assert recs[0].point[0] == pytest.approx(0.0, abs=1e-9)
        assert recs[0].index == 1

    def test_doublewell_indices(self):
        fld, _ = poly_field("(x1^2-1)^2 + x2^2", 2)
        region = dg.BoxRegion([-3, -3], [3, 3], 0.15)
        recs = dg.find_zeros(fld, region, NUM)
        got = sorted((round(r.point[0], 6), round(r.point[1], 6), r.index)
                     for r in recs)
        assert got == [(-1.0, 0.0, 1), (0.0, 0.0, -1), (1.0, 0.0, 1)]

    def test_no_zeros(self):
        fld, _ = poly_field("x1^2", 1)  # gradient 2x, zero only at 0
        region = dg.BoxRegion([0.5], [1.5], 0.1)
        assert dg.find_zeros(fld, region, NUM) == []

    def test_junction_zero_flagged_degenerate(self):
        # a field positive on both sides of its zero: the one-sided finite
        # difference looks nondegenerate but the local boundary degree is 0
        def fn(u):
            x = u[:, 0]
            return np.where(x < 0, -x, x ** 3)[:, None]
        fld = dg.FieldAdapter(fn, 1)
        region = dg.BoxRegion([-1.0], [1.0], 0.1)
        recs = dg.find_zeros(fld, region, NUM)
        assert len(recs) >= 1
        assert all(r.degenerate for r in recs)


class TestKronecker:
    def test_identity_2d(self):
        fld = dg.FieldAdapter(lambda u: u, 2)
        assert dg.kronecker_degree(fld, [-1, -1], [1, 1]) == 1

    @pytest.mark.parametrize("dim,expected", [(1, -1), (2, 1), (3, -1)])
    def test_antipodal_field(self, dim, expected):
        fld = dg.FieldAdapter(lambda u: -u, dim)
        assert dg.kronecker_degree(fld, [-1] * dim, [1] * dim) == expected

    def test_winding_two(self):
        def squared(u):
            z = u[:, 0] + 1j * u[:, 1]
            w = z ** 2
            return np.stack([w.real, w.imag], axis=1)
        fld = dg.FieldAdapter(squared, 2)
        assert dg.kronecker_degree(fld, [-1, -1], [1, 1]) == 2

    def test_margin_guard(self):
        fld = dg.FieldAdapter(lambda u: u, 2)
        with pytest.raises(MarginTooSmall):
            dg.kronecker_degree(fld, [0.0, -1.0], [1.0, 1.0])

    def test_dim_guard(self):
        fld = dg.FieldAdapter(lambda u: u, 4)
        with pytest.raises(DimensionUnsupported):
            dg.kronecker_degree(fld, [-1] * 4, [1] * 4)


def random_confined_potential(rng, dim, degree=3):
    """Random polynomial plus a quartic confinement, zeros pulled inward."""
    terms = {}
    for _ in range(2 * dim + 3):
        exps = tuple(int(e) for e in rng.integers(0, degree + 1, size=dim))
        if sum(exps) > degree:
            continue
        terms[exps] = terms.get(exps, 0.0) + float(rng.normal() * 0.8)
    conf = {}
    for j in range(dim):
        e = [0] * dim
        e[j] = 4
        conf[tuple(e)] = 1.0
    return pt.PolynomialPotential(pt.poly_add(terms, conf), dim)


def cross_oracle_instances(dim, count, base_seed=424200, grid_h=0.25):
    """Deterministic sequence of seeded fields with certified simple zeros."""
    num = Numerics(grid_h=grid_h, bbox=2.0)
    region = dg.BoxRegion([-2.0] * dim, [2.0] * dim, grid_h)
    out = []
    attempt = 0
    while len(out) < count and attempt < 30 * count:
        rng = np.random.default_rng(base_seed + 1000 * dim + attempt)
        attempt += 1
        p = random_confined_potential(rng, dim)
        fld = dg.FieldAdapter(lambda u, p=p: p.grad(u), dim)
        recs = dg.find_zeros(fld, region, num)
        if not recs or any(r.degenerate for r in recs):
            continue
        pts = np.array([r.point for r in recs])
        if np.max(np.abs(pts)) > 1.5:
            continue
        out.append((fld, recs))
    return out, region


class TestCrossOracle:
    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_morse_sum_equals_boundary_degree(self, dim):
        instances, region = cross_oracle_instances(dim, 5)
        assert len(instances) == 5
        for fld, recs in instances:
            morse = sum(r.index for r in recs)
            boundary = dg.kronecker_degree(fld, region.lo, region.hi)
            assert morse == boundary


class TestIntersectionNumber:
    def test_degenerate_flat_in_1d(self):
        # increasing through a degenerate flat: boundary signs (+, +) give 0
        fld, _ = poly_field("0.25*x1^4", 1)  # gradient x^3, degenerate at 0
        region = dg.BoxRegion([-1.0], [1.0], 0.1)
        recs = dg.find_zeros(fld, region, NUM)
        assert any(r.degenerate for r in recs) or recs == []
        sq = dg.FieldAdapter(lambda u: u[:, :1] ** 2, 1)
        recs2 = dg.find_zeros(sq, region, NUM)
        assert dg.intersection_number(sq, region, NUM, records=recs2) == 0

    def test_saddle(self):
        fld, _ = poly_field("x1^2 - x2^2", 2)
        region = dg.BoxRegion([-1, -1], [1, 1], 0.1)
        assert dg.intersection_number(fld, region,
                                      Numerics(grid_h=0.1, bbox=2.0)) == -1

    def test_mexican_hat_plus_one(self):
        fld, _ = poly_field("0.25*(x1^2+x2^2)^2 - 0.5*(x1^2+x2^2)", 2)
        region = dg.BoxRegion([-2, -2], [2, 2], 0.15)
        assert dg.intersection_number(fld, region, NUM) == 1

    def test_zero_free_field_zero(self):
        fld = dg.FieldAdapter(lambda u: u + np.array([3.0, 0.0]), 2)
        region = dg.BoxRegion([-1, -1], [1, 1], 0.2)
        assert dg.intersection_number(fld, region, NUM) == 0

    def test_degenerate_ring_against_winding_oracle(self):
        p = pt.PolynomialPotential.from_expression(
            "0.25*(x1^2+x2^2)^2 - 0.5*(x1^2+x2^2)", 2)
        ours = dg.intersection_number(
            dg.FieldAdapter(lambda u: p.grad(u), 2),
            dg.BoxRegion([-2, -2], [2, 2], 0.15), NUM)
        oracle = round(circle_winding(lambda u: p.grad(u), 1.9))
        assert ours == oracle == 1


class TestTiltPath:
    def test_deterministic_directions_distinct(self):
        u1, u2 = dg._deterministic_directions(1, 7)
        assert u1[0] == 1.0 and u2[0] == -1.0
        v1, v2 = dg._deterministic_directions(3, 7)
        assert abs(float(v1 @ v2)) < 0.99
        w1, w2 = dg._deterministic_directions(3, 7)
        assert np.array_equal(v1, w1) and np.array_equal(v2, w2)

    def test_enclosure_tilt_resolves_flat_ring(self):
        # force the tilt route by running it directly on the mexican hat ring
        p = pt.PolynomialPotential.from_expression(
            "0.25*(x1^2+x2^2)^2 - 0.5*(x1^2+x2^2)", 2)
        fld = dg.FieldAdapter(lambda u: p.grad(u), 2)
        region = dg.BoxRegion([-2, -2], [2, 2], 0.15)
        recs = dg.find_zeros(fld, region, NUM)
        ring_pts = np.array([r.point for r in recs if r.degenerate])
        center_pts = np.array([r.point for r in recs if not r.degenerate])
        enc = dg._Enclosure(region, fld, ring_pts, exclude_pts=center_pts)
        count = dg._enclosure_tilt(fld, region, enc, ring_pts, NUM)
        assert count == 0  # the ring carries no degree


class TestQuotient:
    def test_antipodal_doublewell_quotient(self):
        g = gr.antipodal(2)
        om = dm.full_space()
        f = mp.make_map(g, dm.MapDomain(om, 2.0),
                        pt.PolynomialPotential.from_expression(
                            "(x1^2-1)^2 + x2^2", 2))
        num = Numerics(grid_h=0.1, bbox=2.0)
        lat = iso_types(g, om, num.grid_h, num.bbox)
        free = lat.class_ids[-1]
        stratum = build_stratum(g, om, free, num.grid_h, num.bbox)
        fld = mp.restrict_to_stratum(f, stratum)
        value = dg.quotient_intersection(fld, stratum, "q0", num)
        assert value == 1  # two index-one zeros over a stabilizer of order 2

    def test_orbit_counting_oracle_agrees(self):
        g = gr.antipodal(2)
        om = dm.full_space()
        f = mp.make_map(g, dm.MapDomain(om, 2.0),
                        pt.PolynomialPotential.from_expression(
                            "(x1^2-1)^2 + x2^2", 2))
        num = Numerics(grid_h=0.1, bbox=2.0)
        lat = iso_types(g, om, num.grid_h, num.bbox)
        stratum = build_stratum(g, om, lat.class_ids[-1], num.grid_h, num.bbox)
        fld = mp.restrict_to_stratum(f, stratum)
        region = dg.GridRegion(stratum, stratum.components[0])
        recs = dg.find_zeros(fld, region, num)
        weyl = [stratum.basis.T @ g.elements[w] @ stratum.basis
                for w in stratum.record.weyl_coset_reps]
        total, sizes = quotient_orbit_count(
            np.array([r.point for r in recs]),
            [r.index for r in recs], weyl)
        assert sizes == {2}
        assert total == dg.quotient_intersection(fld, stratum, "q0", num)

    def test_empty_zero_set_quotient(self):
        g = gr.antipodal(1)
        om = dm.full_space()
        f = mp.make_map(g, dm.MapDomain(dm.annulus(0.5, 1.8), 2.0),
                        pt.PolynomialPotential.from_expression(
                            "0.5*x1^2", 1))
        num = Numerics(grid_h=0.1, bbox=2.0)
        lat = iso_types(g, om, num.grid_h, num.bbox)
        stratum = build_stratum(g, om, lat.class_ids[-1], num.grid_h, num.bbox)
        fld = mp.restrict_to_stratum(f, stratum)
        assert dg.quotient_intersection(fld, stratum, "q0", num) == 0


class TestOrbitConsistency:
    def test_orbit_mates_share_index(self):
        g = gr.dihedral(3)
        om = dm.punctured_space()
        f = mp.make_map(g, dm.MapDomain(om, 2.0),
                        pt.PolynomialPotential.from_expression(
                            "(x1^2+x2^2)^2 - x1^2 - x2^2", 2))
        num = Numerics(grid_h=0.1, bbox=2.0)
        lat = iso_types(g, om, num.grid_h, num.bbox)
        stratum = build_stratum(g, om, lat.class_ids[0], num.grid_h, num.bbox)
        fld = mp.restrict_to_stratum(f, stratum)
        by_comp = {}
        for comp in stratum.components:
            recs = dg.find_zeros(fld, dg.GridRegion(stratum, comp), num)
            by_comp[comp.index] = recs
        indices = {i: sorted(r.index for r in recs)
                   for i, recs in by_comp.items()}
        vals = list(indices.values())
        assert all(v == vals[0] for v in vals)
        assert vals[0] == [1]  # radius-sqrt(1/2) minimum on each half axis
