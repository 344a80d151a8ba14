import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.integrate import quad

from minresist import DomainError, InputError, RegularityError, solve
from minresist.billiard import (BACKEND, Body2D, GeneratorCurve, ParabolicArc, QuadratureSpec,
                                Segment, convex_hull, flat_top_body, is_convex,
                                modified_resistance, polyline_body, profile_body, reflect,
                                resistance, trace, trace_many, triangle_body)
from minresist.billiard.hull import ConvexProfile
from minresist.zigzag import approximate_profile, assemble_zigzag, chain_body

compiled = pytest.mark.skipif(BACKEND != "compiled", reason="compiled tracer not built")


def dome_body():
    # z = 1 - x^2: vertex (0, 1), focus (0, 3/4), x = -t
    return Body2D(1.0, [ParabolicArc((0.0, 1.0), (0.0, 0.75), (0.0, -1.0))])


@pytest.fixture(scope="module")
def zig():
    pp = approximate_profile(solve("nonconvex", 2.0), 8)
    return pp, assemble_zigzag(pp, 0.025)


class TestElements:
    def test_segment_basics(self):
        s = Segment((0, 1), (1, 0))
        assert s.length == pytest.approx(math.sqrt(2))
        assert s.reversed().start == (1.0, 0.0)
        assert s.mirrored().start == (0.0, 1.0) and s.mirrored().end == (-1.0, 0.0)
        assert s.scaled((1.0, 0.0), 0.5).start == (0.5, 0.5)

    def test_degenerate_segment(self):
        with pytest.raises(InputError):
            Segment((0.2, 0.2), (0.2, 0.2))

    def test_arc_points_and_focus(self):
        arc = dome_body().curve[0]
        assert arc.a == 0.25
        x = np.linspace(0, 1, 11)
        pts = arc.point(-x)
        np.testing.assert_allclose(pts[:, 0], x, atol=1e-15)
        np.testing.assert_allclose(pts[:, 1], 1 - x * x, atol=1e-15)
        # focus-directrix property: distance to focus = distance to z = 1.25
        d = np.hypot(pts[:, 0], pts[:, 1] - 0.75)
        np.testing.assert_allclose(d, 1.25 - pts[:, 1], atol=1e-15)

    def test_arc_tangents(self):
        arc = dome_body().curve[0]
        assert arc.tangent() == pytest.approx((1.0, 0.0))
        t = arc.tangent(at_end=True)
        assert t == pytest.approx((1 / math.sqrt(5), -2 / math.sqrt(5)))
        r = arc.reversed()
        assert r.start == pytest.approx(arc.end) and r.tangent() == pytest.approx((-t[0], -t[1]))

    def test_arc_mirror_and_scale(self):
        arc = dome_body().curve[0]
        m = arc.mirrored()
        np.testing.assert_allclose(m.sample(9)[:, 0], -arc.sample(9)[:, 0], atol=1e-15)
        np.testing.assert_allclose(m.sample(9)[:, 1], arc.sample(9)[:, 1], atol=1e-15)
        s = arc.scaled((1.0, 0.0), 0.5)
        np.testing.assert_allclose(s.sample(9), 0.5 * arc.sample(9) + [0.5, 0.0], atol=1e-15)

    def test_arc_bbox(self):
        arc = ParabolicArc((0.0, 0.0), (0.0, 1.0), (-1.0, 2.0))
        x0, z0, x1, z1 = arc.bbox()
        # x = t, z = t^2/4 on t in [-1, 2]
        assert (x0, z0, x1, z1) == pytest.approx((-1.0, 0.0, 2.0, 1.0))

    def test_focus_equals_vertex(self):
        with pytest.raises(InputError):
            ParabolicArc((0, 0), (0, 0), (0, 1))

    def test_reflect(self):
        assert reflect((0.0, -1.0), (0.0, 1.0)) == (0.0, 1.0)
        vx, vz = reflect((0.0, -1.0), (math.sqrt(0.5), math.sqrt(0.5)))
        assert (vx, vz) == pytest.approx((1.0, 0.0))


class TestBody:
    def test_loop_order_and_packing(self):
        b = flat_top_body(2.0)
        rows, prev, nxt = b.packed
        assert rows.shape == (b.n_elements, 18)
        assert prev.dtype == np.int64 and nxt[-1] == 0 and prev[0] == b.n_elements - 1
        # clockwise: left wall up, top, right wall down, bottom
        starts = [e.start for e in b.loop]
        assert starts == [(-1.0, 0.0), (-1.0, 2.0), (0.0, 2.0), (1.0, 2.0), (1.0, 0.0)]

    def test_json_round_trip(self, zig, tmp_path):
        for body in (zig[1], chain_body(0.2), dome_body(), triangle_body(0.5)):
            path = tmp_path / "b.json"
            body.save(path)
            again = Body2D.from_json(str(path))
            assert again.to_json() == body.to_json()
            assert Body2D.from_json(body.dumps()).to_json() == body.to_json()

    @pytest.mark.parametrize("doc", [
        {"height": 1, "elements": [{"type": "segment", "from": [0, 1], "to": [0.5, 1]},
                                   {"type": "segment", "from": [0.6, 1], "to": [1, 1]}]},
        {"height": 1, "elements": [{"type": "segment", "from": [0, 1], "to": [0.9, 1]}]},
        {"height": 1, "elements": [{"type": "segment", "from": [0, 1.5], "to": [1, 1]}]},
        {"height": 1, "elements": [{"type": "segment", "from": [0, 0.5], "to": [1, 0.5]}]},
        {"height": 1, "elements": [{"type": "cubic"}]},
        {"elements": []},
        {"height": 1, "symmetric": False, "elements": [
            {"type": "segment", "from": [-1, 0.5], "to": [0.5, 1]},
            {"type": "segment", "from": [0.5, 1], "to": [-0.5, 1]},
            {"type": "segment", "from": [-0.5, 1], "to": [1, 0.5]}]},
    ])
    def test_invalid_bodies(self, doc):
        with pytest.raises(InputError):
            Body2D.from_json(doc)

    def test_unreadable(self, tmp_path):
        with pytest.raises(InputError):
            Body2D.from_json(str(tmp_path / "nope.json"))

    def test_generated_bodies_valid(self, zig):
        zig[1].validate()
        for h in (0.05, 0.2, 0.5):
            chain_body(h).validate()
        profile_body(solve("newton", 2.0), 200).validate()


class TestTrace:
    def test_flat(self):
        r = trace(flat_top_body(), 0.3)
        assert r.status == "exited" and r.bounces == 1 and r.exit_velocity == (0.0, 1.0)
        assert r.hits[0][0] == pytest.approx((0.3, 1.0))

    def test_triangle(self):
        r = trace(triangle_body(1.0), 0.4)
        assert r.exit_velocity == pytest.approx((1.0, 0.0), abs=1e-15)

    def test_dome_exits_away_from_focus(self):
        b = dome_body()
        for x in (0.1, 0.37, 0.8):
            r = trace(b, x)
            assert r.bounces == 1
            (px, pz), _ = r.hits[0]
            d = np.array([px, pz - 0.75])
            d /= np.linalg.norm(d)
            assert r.exit_velocity == pytest.approx(tuple(d), abs=1e-12)
            assert 1 + r.vz == pytest.approx(2 / (1 + 4 * x * x), rel=1e-12)

    def test_apex_is_singular(self):
        assert trace(triangle_body(1.0), 0.0).status == "singular_hit"

    def test_valley_is_singular(self):
        b = polyline_body([0, 0.5, 1], [1, 0.5, 1], h=1.0)
        assert trace(b, 0.5).status == "singular_hit"

    def test_smooth_junction_is_regular(self):
        b = polyline_body([0, 0.5, 1], [1, 0.75, 0.5], h=1.0)
        r = trace(b, 0.5)
        assert r.status == "exited" and r.bounces == 1

    def test_no_hit_on_open_body(self):
        b = Body2D(1.0, [Segment((-1.0, 0.5), (0.5, 0.5))], symmetric=False, closed=False)
        assert trace(b, 0.8).status == "no_hit"
        assert trace_many(b, [0.8], backend="python")[3][0] == 1

    def test_cap_exceeded(self, zig):
        pp, body = zig
        r = trace(body, 0.2)
        assert r.status == "exited" and r.bounces == 2
        assert trace(body, 0.2, cap=1).status == "cap_exceeded"

    def test_energy_conserved(self, zig):
        xs = np.linspace(-0.999, 0.999, 2001)
        for body in (zig[1], chain_body(0.2), dome_body()):
            vx, vz, b, st = trace_many(body, xs, backend="python")
            ok = st == 0
            np.testing.assert_allclose(np.hypot(vx[ok], vz[ok]), 1.0, atol=1e-12)

    def test_mirror_symmetry(self, zig):
        xs = np.linspace(0.001, 0.999, 997)
        body = zig[1]
        a = trace_many(body, xs, backend="python")
        b = trace_many(body, -xs, backend="python")
        np.testing.assert_array_equal(a[3], b[3])
        ok = a[3] == 0
        np.testing.assert_allclose(a[0][ok], -b[0][ok], atol=1e-12)
        np.testing.assert_allclose(a[1][ok], b[1][ok], atol=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            trace(flat_top_body(), 1.5)
        with pytest.raises(DomainError):
            trace(flat_top_body(), 0.5, cap=0)

    def test_single_matches_batch(self, zig):
        xs = np.linspace(0.01, 0.99, 37)
        vx, vz, b, st = trace_many(zig[1], xs, backend="python")
        for k, x in enumerate(xs):
            r = trace(zig[1], float(x))
            assert r.bounces == b[k] and r.exit_velocity == (vx[k], vz[k])


@compiled
class TestBackends:
    def bodies(self, zig):
        rng = np.random.default_rng(3)
        out = [flat_top_body(), triangle_body(), dome_body(), zig[1], chain_body(0.2),
               chain_body(0.05), profile_body(solve("newton", 2.0), 100)]
        for _ in range(5):
            xs = np.sort(np.concatenate([[0, 1], rng.uniform(0, 1, 6)]))
            zs = rng.uniform(0, 1, 8)
            zs[rng.integers(8)] = 1.0
            out.append(polyline_body(xs, zs, h=1.0))
        return out

    def test_equivalence(self, zig):
        xs = np.concatenate([np.linspace(-1, 1, 4001), [0.0, 0.3, 0.5, 0.125, 0.25]])
        for body in self.bodies(zig):
            p = trace_many(body, xs, backend="python")
            c = trace_many(body, xs, backend="compiled", threads=2)
            np.testing.assert_array_equal(p[3], c[3])
            np.testing.assert_array_equal(p[2], c[2])
            # operation order differs (numpy vs C); multi-bounce rays drift by ~1e-12
            np.testing.assert_allclose(p[0], c[0], atol=1e-10, rtol=0)
            np.testing.assert_allclose(p[1], c[1], atol=1e-10, rtol=0)

    def test_thread_count_irrelevant(self, zig):
        q1 = QuadratureSpec(threads=1)
        q4 = QuadratureSpec(threads=4)
        assert resistance(zig[1], q1).value == resistance(zig[1], q4).value


def test_pure_backend_env():
    env = dict(os.environ, MINRESIST_PURE="1")
    out = subprocess.run([sys.executable, "-c",
                          "from minresist.billiard import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


class TestQuadrature:
    def test_flat(self):
        assert resistance(flat_top_body()).value == pytest.approx(1.0, abs=1e-14)

    def test_triangle(self):
        assert resistance(triangle_body(1.0)).value == pytest.approx(0.5, abs=1e-12)

    def test_dome(self):
        # 1 + v_z = 2/(1 + 4x^2)
        assert resistance(dome_body()).value == pytest.approx(math.log(5) / 4, abs=1e-10)

    def test_python_backend_small(self):
        q = QuadratureSpec(panels=16, backend="python")
        assert resistance(dome_body(), q).value == pytest.approx(math.log(5) / 4, abs=1e-9)

    def test_interval(self):
        r = resistance(flat_top_body(), interval=(0.25, 0.5))
        assert r.value == pytest.approx(0.5 ** 2 - 0.25 ** 2, abs=1e-14)

    def test_nonsymmetric_body_averages_both_sides(self):
        b = polyline_body([-1, 1], [1, 0.5], h=1.0, symmetric=False)
        s = -0.25
        vz = (1 - s * s) / (1 + s * s)
        assert resistance(b).value == pytest.approx((1 + vz) / 2, abs=1e-12)

    def test_regularity_error(self, zig):
        with pytest.raises(RegularityError) as info:
            resistance(zig[1], QuadratureSpec(cap=1))
        assert len(info.value.xs) > 0

    def test_deterministic(self, zig):
        a = resistance(zig[1])
        b = resistance(zig[1])
        assert a == b


class TestHull:
    def test_convexity(self, zig):
        assert is_convex(flat_top_body()) and is_convex(triangle_body()) and is_convex(dome_body())
        assert not is_convex(zig[1])
        assert not is_convex(chain_body(0.2))
        assert is_convex(profile_body(solve("nonconvex", 2.0), 100))

    def test_hull_of_zigzag_is_near_the_polygon(self, zig):
        # cells may rise to the line of slope s_i + delta through P, i.e. delta*L above
        pp, body = zig
        prof = ConvexProfile(convex_hull(body))
        x = np.linspace(0, 1, 1001)
        gap = prof(x) - pp(x)
        assert gap.min() >= -1e-12
        assert gap.max() <= 0.025 * np.diff(pp.xs).max() + 1e-12
        np.testing.assert_allclose(prof(pp.xs), pp.fs, atol=1e-12)

    def test_hull_of_polygon_body_is_itself(self, zig):
        pp = zig[0]
        hull = pp.hull_body()
        assert convex_hull(hull) is hull
        assert modified_resistance(hull) == pytest.approx(pp.modified_resistance(), rel=1e-12)

    def test_modified_resistance_of_dome(self):
        ref, _ = quad(lambda x: (1 - 2 * x / math.sqrt(1 + 4 * x * x)) * x, 0, 1,
                      epsabs=1e-14)
        assert modified_resistance(dome_body()) == pytest.approx(ref, abs=1e-12)

    def test_modified_resistance_rejects_nonconvex(self, zig):
        with pytest.raises(DomainError):
            modified_resistance(zig[1])

    def test_hull_of_chain_is_above(self):
        b = chain_body(0.2)
        prof = ConvexProfile(convex_hull(b))
        pts = np.vstack([e.sample(33) for e in b.curve])
        assert np.all(prof(pts[:, 0]) >= pts[:, 1] - 1e-12)
        assert prof(0.0) == pytest.approx(0.2)
