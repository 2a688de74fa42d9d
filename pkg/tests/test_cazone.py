import itertools
import random

import numpy as np
import pytest

from cazpipe.cazone import (
    HP,
    LP,
    MergeParams,
    SafetyPolicy,
    assign_priority,
    check_close,
    merge,
    pre_inflate,
)
from cazpipe.geom import PixelBox, inflate, iou
from cazpipe.lidar import Cluster2D

FRAME = (640, 480)
P = MergeParams()


def cluster(x0, y0, x1, y1, depth):
    return Cluster2D(box=PixelBox(x0, y0, x1, y1), depth=depth)


def random_clusters(rng, n, frame=FRAME):
    out = []
    for _ in range(n):
        x = rng.randrange(0, frame[0] - 60)
        y = rng.randrange(0, frame[1] - 50)
        w = rng.randrange(4, 60)
        h = rng.randrange(4, 50)
        out.append(cluster(x, y, x + w, y + h, rng.uniform(1.0, 74.0)))
    return out


class TestPreInflate:
    def test_zero_coefficient_identity(self):
        cs = [cluster(10, 10, 20, 20, 30.0)]
        out = pre_inflate(cs, MergeParams(inflate_c=0.0), FRAME)
        assert out[0].box == cs[0].box

    def test_margin_scales_with_depth(self):
        c = cluster(100, 100, 120, 120, 10.0)
        out, = pre_inflate([c], P, FRAME)
        assert out.box == PixelBox(98, 98, 122, 122)  # 0.2 * 10 = 2 px

    def test_farther_inflated_more(self):
        near = pre_inflate([cluster(100, 100, 120, 120, 10.0)], P, FRAME)[0]
        far = pre_inflate([cluster(100, 100, 120, 120, 50.0)], P, FRAME)[0]
        near_margin = 100 - near.box.x_min
        far_margin = 100 - far.box.x_min
        assert far_margin == 10 and near_margin == 2
        assert far_margin > near_margin


class TestCheckClose:
    def test_identical_clusters_close(self):
        c = cluster(10, 10, 40, 40, 20.0)
        assert check_close(c, c, P, FRAME)

    def test_depth_gap_beyond_l_never_close(self):
        a = cluster(10, 10, 40, 40, 10.0)
        b = cluster(10, 10, 40, 40, 40.0)
        assert not check_close(a, b, P, FRAME)

    def test_touching_boxes_become_close_via_margins(self):
        # margins a*depth = 10 px each overlap the inflated boxes past IoU 0.1
        a = cluster(0, 0, 20, 20, 20.0)
        b = cluster(20, 0, 40, 20, 20.0)
        ia = inflate(a.box, 10, FRAME)
        ib = inflate(b.box, 10, FRAME)
        assert iou(ia, ib) == pytest.approx(600 / 1500)  # analytic for this geometry
        assert iou(a.box, b.box) == 0.0
        assert check_close(a, b, P, FRAME)

    def test_inputs_not_mutated(self):
        a = cluster(0, 0, 20, 20, 20.0)
        b = cluster(30, 0, 50, 20, 21.0)
        check_close(a, b, P, FRAME)
        assert a.box == PixelBox(0, 0, 20, 20)
        assert b.box == PixelBox(30, 0, 50, 20)

    def test_symmetric(self):
        rng = random.Random(5)
        for _ in range(200):
            a, b = random_clusters(rng, 2)
            assert check_close(a, b, P, FRAME) == check_close(b, a, P, FRAME)


def assert_fixed_point(zones, p=P, frame=FRAME):
    for a, b in itertools.combinations(zones, 2):
        assert not check_close(a, b, p, frame)
        assert iou(a.box, b.box) <= p.iou_overlap


def union_mask(zones, frame=FRAME):
    m = np.zeros((frame[1], frame[0]), dtype=bool)
    for z in zones:
        m[z.box.y_min : z.box.y_max, z.box.x_min : z.box.x_max] = True
    return m


class TestMerge:
    def test_empty(self):
        assert merge([], P, FRAME) == []

    def test_identical_pair_merges_to_min_depth(self):
        a = cluster(10, 10, 40, 40, 25.0)
        b = cluster(10, 10, 40, 40, 60.0)  # IoU 1 > 0.3 merges across depths
        out = merge([a, b], P, FRAME)
        assert len(out) == 1
        assert out[0].box == a.box
        assert out[0].depth == 25.0

    def test_chain_collapses_to_single_zone(self):
        # only adjacent pairs are close; transitively all three merge
        a = cluster(0, 0, 10, 10, 10.0)
        b = cluster(9, 0, 19, 10, 10.0)
        c = cluster(18, 0, 28, 10, 10.0)
        assert check_close(a, b, P, FRAME) and check_close(b, c, P, FRAME)
        assert not check_close(a, c, P, FRAME)
        for perm in itertools.permutations([a, b, c]):
            out = merge(list(perm), P, FRAME)
            assert len(out) == 1
            assert out[0].box == PixelBox(0, 0, 28, 10)
            assert out[0].depth == 10.0

    def test_distant_disjoint_clusters_untouched(self):
        a = cluster(0, 0, 10, 10, 10.0)
        b = cluster(500, 400, 520, 420, 70.0)
        out = merge([a, b], P, FRAME)
        assert len(out) == 2

    def test_fixed_point_and_coverage_random(self):
        rng = random.Random(42)
        for _ in range(300):
            cs = random_clusters(rng, rng.randint(0, 12))
            out = merge(cs, P, FRAME)
            assert_fixed_point(out)
            cov_in = union_mask(cs)
            cov_out = union_mask(out)
            assert np.all(cov_out >= cov_in)  # coverage monotone
            assert {z.depth for z in out} <= {c.depth for c in cs}

    def test_all_permutations_reach_a_fixed_point(self):
        # The box partition (and even the union coverage) may differ between
        # permutations; the guaranteed contract is fixed point + monotone
        # coverage for every input order.
        rng = random.Random(9)
        for _ in range(40):
            cs = random_clusters(rng, rng.randint(2, 6))
            cov_in = union_mask(cs)
            for perm in itertools.permutations(range(len(cs))):
                out = merge([cs[i] for i in perm], P, FRAME)
                assert_fixed_point(out)
                assert np.all(union_mask(out) >= cov_in)


class TestSafetyPolicy:
    POLICY = SafetyPolicy([(10.0, 15.0), (20.0, 40.0), (30.0, 90.0)])

    def test_lookup_uses_next_entry_at_or_above_speed(self):
        assert self.POLICY.distance_for(5.0) == 15.0
        assert self.POLICY.distance_for(10.0) == 15.0
        assert self.POLICY.distance_for(10.1) == 40.0
        assert self.POLICY.distance_for(50.0) == 90.0  # beyond table: last entry

    def test_nonmonotone_rejected(self):
        with pytest.raises(ValueError):
            SafetyPolicy([(10.0, 40.0), (20.0, 15.0)])


class TestAssignPriority:
    POLICY = SafetyPolicy([(20.0, 40.0)])

    @pytest.mark.parametrize("depth,expected", [(30.0, HP), (40.0, HP), (41.0, LP)])
    def test_boundary_inclusive(self, depth, expected):
        zone, = assign_priority([cluster(0, 0, 10, 10, depth)], 20.0, self.POLICY)
        assert zone.priority == expected
        assert zone.depth == depth
