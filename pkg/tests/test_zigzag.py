import json
import math

import numpy as np
import pytest

from minresist import DomainError, ParameterError, RegimeError, solve
from minresist.billiard import (Segment, convex_hull, is_convex, resistance, trace,
                                trace_many)
from minresist.billiard.hull import ConvexProfile
from minresist.zigzag import (PartitionedProfile, approximate_profile, assemble_zigzag,
                              build_cell, chain_body, chain_closed_form, chain_nodes,
                              chain_resistance, check_delta, zigzag_cells)


@pytest.fixture(scope="module")
def pp():
    return approximate_profile(solve("nonconvex", 2.0), 8)


def two_bounce_set(cell, delta):
    """Abscissas where the two-reflection exit formula must hold (own pattern only)."""
    xa, xb = cell.P[0], cell.P1[0]
    hi = xb if cell.x_delta >= xb else min(cell.x_delta, xb - delta)
    return xa + delta, hi


class TestPartition:
    def test_uniform_nodes(self, pp):
        assert pp.m == 8 and pp.h == 2.0
        np.testing.assert_allclose(pp.xs, np.arange(9) / 8)
        s = solve("nonconvex", 2.0)
        np.testing.assert_allclose(pp.fs, 2.0 - s.profile(pp.xs), atol=1e-14)
        assert np.all(np.diff(pp.slopes) < 0)

    def test_equislope_nodes(self):
        s = solve("nonconvex", 2.0)
        q = approximate_profile(s, 8, nodes="equislope")
        assert q.m == 8 and q.xs[0] == 0 and q.xs[-1] == 1
        assert np.all(np.diff(q.slopes) < 0)

    def test_flat_disk_skipped(self):
        q = approximate_profile(solve("newton", 2.0), 8)
        assert q.xs[1] >= solve("newton", 2.0).x0

    def test_callable(self):
        q = approximate_profile(lambda x: 1 - x * x, 4)
        np.testing.assert_allclose(q.fs, 1 - q.xs ** 2)

    def test_rejects(self):
        with pytest.raises(DomainError):
            approximate_profile(solve("nonconvex", 2.0), 1)
        with pytest.raises(DomainError):
            approximate_profile(solve("nonconvex", 2.0), 4, nodes="random")
        with pytest.raises(DomainError):
            PartitionedProfile([0, 0.5, 1], [1, 0.2, 0.1])  # convex corner
        with pytest.raises(DomainError):
            PartitionedProfile([0, 0.5, 0.9], [1, 0.9, 0.5])

    def test_modified_resistance_closed_form(self, pp):
        from scipy.integrate import quad
        pts = list(pp.xs[1:-1])
        ref, _ = quad(lambda x: (1 + pp.slope(x) / math.sqrt(1 + pp.slope(x) ** 2)) * x,
                      0, 1, points=pts, epsabs=1e-14)
        assert pp.modified_resistance() == pytest.approx(ref, abs=1e-12)


class TestPreconditions:
    def test_constraints(self, pp):
        bound, name = pp.delta_bound()
        assert name == "segment_length" and bound == 0.125
        for delta, cons in [(0.0, "positive"), (-1.0, "positive"), (0.5, "slope_gap"),
                            (0.13, "segment_length")]:
            with pytest.raises(ParameterError) as info:
                check_delta(pp, delta)
            assert info.value.constraint == cons

    def test_slope_constraint(self):
        q = PartitionedProfile([0, 0.5, 1], [1, 0.975, 0])
        with pytest.raises(ParameterError) as info:
            check_delta(q, 0.1)
        assert info.value.constraint == "slope"

    def test_cell_index(self, pp):
        with pytest.raises(DomainError):
            build_cell(pp, 0, 0.01)
        with pytest.raises(DomainError):
            build_cell(pp, 9, 0.01)


@pytest.mark.parametrize("delta", [0.05, 0.025, 0.0125, 0.004])
class TestCells:
    def test_curve_connects_P_to_P1(self, pp, delta):
        for c in zigzag_cells(pp, delta):
            els = c.elements
            assert els[0].start == pytest.approx(c.P, abs=1e-15)
            assert els[-1].end == pytest.approx(c.P1, abs=1e-15)
            for a, b in zip(els, els[1:]):
                assert math.dist(a.end, b.start) < 1e-12

    def test_inside_quadrangle(self, pp, delta):
        for c in zigzag_cells(pp, delta):
            (xa, fa), (xb, fb) = c.P, c.P1
            sigma = (fb - fa) / (xb - xa) + delta
            for e in c.elements:
                pts = e.sample(2 if isinstance(e, Segment) else 65)
                assert np.all(pts[:, 0] >= xa - 1e-12) and np.all(pts[:, 0] <= xb + 1e-12)
                assert np.all(pts[:, 1] >= fb - 1e-12)
                assert np.all(pts[:, 1] <= fa + sigma * (pts[:, 0] - xa) + 1e-12)

    def test_named_points(self, pp, delta):
        c = build_cell(pp, 3, delta)
        (xa, fa), (xb, fb) = c.P, c.P1
        s = (fb - fa) / (xb - xa)
        assert c.Q == (xa, fb) and c.Q_d == pytest.approx((xa + delta, fb))
        assert c.P_d == pytest.approx((xa + delta, fa + s * delta))
        assert c.S_d == pytest.approx((xa + delta, fa + (s + delta) * delta))
        d = c.debug()
        assert list(d) == ["i", "P", "P'", "Q", "S", "Q_delta", "P_delta", "S_delta",
                           "x_delta", "homothety_ratio", "images", "pi_focal_length"]
        json.dumps(d)

    def test_two_bounce_exit_formula(self, pp, delta):
        body = assemble_zigzag(pp, delta)
        for c in zigzag_cells(pp, delta):
            lo, hi = two_bounce_set(c, delta)
            if hi - lo < 1e-9:
                continue
            xs = np.linspace(lo, hi, 203)[1:-1]
            vx, vz, b, st = trace_many(body, xs)
            sigma = c.exit_slope
            assert np.all(st == 0) and np.all(b == 2)
            np.testing.assert_allclose(vz, sigma / math.sqrt(1 + sigma * sigma), atol=1e-9)
            # exit direction parallel to l: angle between v and (1, sigma)
            ang = np.abs(np.arctan2(vx * sigma - vz, vx + vz * sigma))
            assert ang.max() < 1e-9


def test_two_bounce_focus_chain(pp):
    body = assemble_zigzag(pp, 0.025)
    c = build_cell(pp, 4, 0.025)
    lo, hi = two_bounce_set(c, 0.025)
    r = trace(body, 0.5 * (lo + hi))
    (p1, _), (p2, _) = r.hits
    # first reflection heads for the focus P_delta
    fx, fz = c.P_d
    cross = (fx - p1[0]) * (p2[1] - p1[1]) - (fz - p1[1]) * (p2[0] - p1[0])
    assert abs(cross) < 1e-12


def test_bad_set_is_first_order(pp):
    xs = (np.arange(100_000) + 0.5) / 100_000
    C = []
    for delta in (0.025, 0.0125, 0.00625):
        body = assemble_zigzag(pp, delta)
        vx, vz, b, st = trace_many(body, xs)
        sigma = pp.slope(xs) + delta
        good = (st == 0) & (b == 2) & (np.abs(vz - sigma / np.sqrt(1 + sigma ** 2)) < 1e-9)
        C.append((1 - good.mean()) / delta)
    print("bad-set constant C:", ["%.2f" % c for c in C])
    # two bands of width delta per cell, eight cells
    assert all(10 <= c <= 20 for c in C)


class TestAssembly:
    def test_body_invariants(self, pp):
        body = assemble_zigzag(pp, 0.0125).validate()
        assert body.symmetric and body.meta["kind"] == "zigzag"
        boxes = np.array([e.bbox() for e in body.loop])
        assert boxes[:, 3].max() == pytest.approx(2.0)
        assert boxes[:, 1].min() == 0.0
        assert boxes[:, 0].min() == -1.0 and boxes[:, 2].max() == 1.0
        assert not is_convex(body)

    def test_hull_is_the_partition(self, pp):
        delta = 0.0125
        prof = ConvexProfile(convex_hull(assemble_zigzag(pp, delta)))
        x = np.linspace(0, 1, 2001)
        gap = prof(x) - pp(x)
        assert -1e-12 <= gap.min() and gap.max() <= delta * 0.125 + 1e-12

    def test_lemma1_on_zigzag(self, pp):
        for delta in (0.05, 0.0125):
            assert resistance(assemble_zigzag(pp, delta)).value >= pp.modified_resistance()

    def test_deterministic(self, pp):
        assert assemble_zigzag(pp, 0.02).dumps() == assemble_zigzag(pp, 0.02).dumps()


def test_diagonal_convergence():
    """m_n = 2^(n+2), delta_n = 2^(-n-3): R(G_n) within 5e-2 of the hull value at n = 4."""
    s = solve("nonconvex", 2.0)
    n = 4
    q = approximate_profile(s, 2 ** (n + 2))
    R = resistance(assemble_zigzag(q, 2.0 ** (-n - 3))).value
    print(f"diagonal n={n}: R={R:.6f} hull={q.modified_resistance():.6f} "
          f"optimum={s.resistance:.6f}")
    assert abs(R - s.resistance) < 5e-2


class TestChain:
    def test_nodes(self):
        nodes = chain_nodes(0.2)
        assert nodes[0] == 4 * 0.2 / 3
        np.testing.assert_allclose(np.diff(nodes), nodes[0])
        assert nodes[-1] < 1 <= nodes[-1] + nodes[0]
        assert list(chain_nodes(0.5)) == pytest.approx([2 / 3, 5 / 6])

    def test_regime(self):
        for h in (0.54, 0.6, 0.0):
            with pytest.raises(RegimeError):
                chain_body(h)

    def test_custom_nodes(self):
        body = chain_body(0.3, odd_nodes=[0.3, 0.6, 0.75, 0.95]).validate()
        assert body.meta["odd_nodes"] == [0.3, 0.6, 0.75, 0.95]
        with pytest.raises(DomainError):
            chain_body(0.3, odd_nodes=[0.5, 0.4])
        with pytest.raises(DomainError):
            chain_body(0.1, odd_nodes=[0.1, 0.9])

    @pytest.mark.parametrize("h", [0.05, 0.2, 0.4])
    def test_profile_formula(self, h):
        body = chain_body(h)
        nodes = np.asarray(body.meta["odd_nodes"])
        arcs = body.curve.elements[1:-1]
        for k, (lo, hi) in enumerate(zip(nodes[:-1], nodes[1:])):
            left, right = arcs[2 * k], arcs[2 * k + 1]
            D, mid = hi - lo, 0.5 * (lo + hi)
            y = h - D / 2
            assert left.start == pytest.approx((lo, h), abs=1e-14)
            assert right.end == pytest.approx((hi, h), abs=1e-14)
            assert left.end == pytest.approx(right.start, abs=1e-14)
            for pt in left.sample(9):
                assert pt[1] == pytest.approx((pt[0] - hi) ** 2 / (2 * D) + y, abs=1e-14)
                assert lo - 1e-14 <= pt[0] <= mid + 1e-14
            for pt in right.sample(9):
                assert pt[1] == pytest.approx((pt[0] - lo) ** 2 / (2 * D) + y, abs=1e-14)
            # the right arc is the left arc reflected about x = mid
            assert right.vertex[1] == left.vertex[1] and right.a == left.a
            assert right.t_range == (-left.t_range[1], -left.t_range[0])
            pl, pr = left.sample(17), right.sample(17)[::-1]
            np.testing.assert_allclose(pl[:, 1], pr[:, 1], atol=1e-15)
            np.testing.assert_allclose(pl[:, 0] - mid, mid - pr[:, 0], atol=1e-15)

    def test_single_impact_and_velocity(self):
        body = chain_body(0.2)
        nodes = body.meta["odd_nodes"]
        for lo, hi in zip(nodes[:-1], nodes[1:]):
            mid = 0.5 * (lo + hi)
            xs = np.linspace(lo, mid, 53)[1:-1]
            vx, vz, b, st = trace_many(body, xs)
            assert np.all(b == 1) and np.all(st == 0)
            np.testing.assert_allclose(1 + vz, 2 / (1 + ((hi - xs) / (hi - lo)) ** 2),
                                       atol=1e-12)

    def test_closed_form_identity(self):
        parts = chain_resistance(chain_body(0.2))
        assert parts["parabolic"] == pytest.approx(parts["closed_form"], abs=1e-6)
        assert parts["total"] == pytest.approx(resistance(chain_body(0.2)).value, abs=1e-8)
        nodes = chain_nodes(0.2)
        assert chain_closed_form(0.2) == pytest.approx(
            (nodes[-1] ** 2 - nodes[0] ** 2) * (math.pi / 2 - 2 * math.atan(0.5)))
