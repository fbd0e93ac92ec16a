"""Stratification tests: orbit-type lattices, components, quotient structure."""
import numpy as np
import pytest

from egdeg import domains as dom
from egdeg import groups as gr
from egdeg import strata as st
from egdeg.errors import NotInStratum

H, BBOX = 0.1, 2.0


@pytest.fixture(scope="module")
def d3():
    return gr.dihedral(3)


@pytest.fixture(scope="module")
def d3_punctured(d3):
    return st.iso_types(d3, dom.punctured_space(), H, BBOX)


def test_d3_punctured_types(d3, d3_punctured):
    lat = d3_punctured
    labels = lat.labels()
    assert labels == ["(H2a)", "(e)"]
    orders = [d3.lattice.records[c].order for c in lat.class_ids]
    assert orders == sorted(orders, reverse=True)


def test_z2_line_types():
    g = gr.antipodal(1)
    lat = st.iso_types(g, dom.full_space(), H, BBOX)
    assert lat.labels() == ["(G)", "(e)"]


def test_empty_domain_lattice():
    g = gr.antipodal(1)
    with pytest.warns(UserWarning, match="no exact-isotropy witness"):
        lat = st.iso_types(g, dom.ball(0.0), H, BBOX)
    assert lat.class_ids == []


def test_linear_order_respects_partial_order(d3):
    lat = st.iso_types(d3, dom.full_space(), H, BBOX)
    sub = d3.lattice
    pos = {c: i for i, c in enumerate(lat.class_ids)}
    for a in lat.class_ids:
        for b in lat.class_ids:
            if sub.leq[a, b] and a != b:
                assert pos[b] < pos[a]


def test_reflection_stratum_components(d3, d3_punctured):
    s = st.build_stratum(d3, dom.punctured_space(), d3_punctured.class_ids[0],
                         H, BBOX)
    assert len(s.components) == 2
    assert s.quotient_labels() == ["q0", "q1"]
    assert s.weyl_order == 1


def test_free_stratum_components(d3, d3_punctured):
    s = st.build_stratum(d3, dom.punctured_space(), d3_punctured.class_ids[1],
                         H, BBOX)
    # oracle: a dihedral arrangement of 3 lines cuts the plane into 6 chambers
    assert len(s.components) == 6
    assert s.quotient_labels() == ["q0"]
    orbit = s.quotient_orbits[0]
    assert sorted(orbit.members) == list(range(6))
    assert all(v == 1 for v in orbit.stabilizer_orders.values())


def test_antipodal_plane_free_stratum():
    g = gr.antipodal(2)
    lat = st.iso_types(g, dom.punctured_space(), H, BBOX)
    s = st.build_stratum(g, dom.punctured_space(), lat.class_ids[0], H, BBOX)
    assert len(s.components) == 1
    assert s.quotient_labels() == ["q0"]
    assert s.quotient_orbits[0].stabilizer_orders[0] == 2


def test_orbit_size_times_stabilizer(d3, d3_punctured):
    for cid in d3_punctured.class_ids:
        s = st.build_stratum(d3, dom.punctured_space(), cid, H, BBOX)
        wh = s.weyl_order
        for orb in s.quotient_orbits:
            for c in orb.members:
                assert len(orb.members) * orb.stabilizer_orders[c] == wh


def test_weyl_action_composition(d3, d3_punctured):
    s = st.build_stratum(d3, dom.punctured_space(), d3_punctured.class_ids[1],
                         H, BBOX)
    g = d3
    reps = list(s.weyl_perm)
    rng = np.random.default_rng(5)
    rec = s.record
    members = set(rec.member_indices)
    for _ in range(20):
        w1, w2 = rng.choice(reps, size=2)
        prod = g.mul(int(w1), int(w2))
        # identify the coset representative of the product
        rep_prod = next(r for r in reps
                        if g.mul(g.inv(int(r)), prod) in members)
        composed = [s.weyl_perm[int(w1)][s.weyl_perm[int(w2)][c]]
                    for c in range(len(s.components))]
        assert composed == s.weyl_perm[rep_prod]


def test_exact_isotropy_of_cells(d3, d3_punctured):
    s = st.build_stratum(d3, dom.punctured_space(), d3_punctured.class_ids[0],
                         H, BBOX)
    for comp in s.components:
        pts = s.to_ambient(comp.centers[:50])
        cids, ok = gr.isotropy_class_map(d3, pts)
        assert ok.all()
        assert (cids == s.class_id).all()


def test_maximal_stratum_relatively_closed(d3):
    # cells of the maximal type form a relatively closed set among domain
    # cells: no free-stratum cell is adjacent to the missing band around a
    # reflection axis without the axis cells being excluded by distance.
    lat = st.iso_types(d3, dom.punctured_space(), H, BBOX)
    s_max = st.build_stratum(d3, dom.punctured_space(), lat.class_ids[0], H, BBOX)
    # every kept cell center of the maximal stratum has isotropy exactly H;
    # together with the h-exclusion band this realizes relative closedness
    for comp in s_max.components:
        assert s_max.singular.min_distance(s_max.to_ambient(comp.centers)).min() > H


def test_locate_on_axis(d3, d3_punctured):
    s = st.build_stratum(d3, dom.punctured_space(), d3_punctured.class_ids[0],
                         H, BBOX)
    comp_pos, q_pos = st.locate(s, [1.0, 0.0])
    comp_neg, q_neg = st.locate(s, [-1.0, 0.0])
    assert comp_pos != comp_neg
    assert {q_pos, q_neg} == {"q0", "q1"}


def test_locate_rejects_larger_isotropy(d3, d3_punctured):
    s = st.build_stratum(d3, dom.punctured_space(), d3_punctured.class_ids[1],
                         H, BBOX)
    with pytest.raises(NotInStratum):
        st.locate(s, [1.0, 0.0])


def test_locate_z2_line_quotient():
    g = gr.antipodal(1)
    lat = st.iso_types(g, dom.full_space(), H, BBOX)
    s = st.build_stratum(g, dom.full_space(), lat.class_ids[1], H, BBOX)
    c1, q1 = st.locate(s, [-0.5])
    c2, q2 = st.locate(s, [0.5])
    assert c1 != c2 and q1 == q2 == "q0"


def test_halving_never_decreases_components(d3, d3_punctured):
    for cid in d3_punctured.class_ids:
        coarse = st.build_stratum(d3, dom.punctured_space(), cid, H, BBOX)
        fine = st.build_stratum(d3, dom.punctured_space(), cid, H / 2, BBOX)
        assert len(fine.components) >= len(coarse.components)
        # and the refinement check passes
        st.build_stratum(d3, dom.punctured_space(), cid, H, BBOX,
                         refinement_check=True)


def test_s3_lattice_skips_coincident_fixed_space():
    g = gr.symmetric(3)
    lat = st.iso_types(g, dom.full_space(), 0.15, 1.6)
    assert lat.labels() == ["(G)", "(H2a)", "(e)"]  # (H3a) has no stratum


def test_domain_invariance_validation():
    g = gr.dihedral(3)
    dom.validate_invariance(dom.punctured_space(), g, BBOX)
    dom.validate_invariance(dom.annulus(0.5, 1.5), g, BBOX)
