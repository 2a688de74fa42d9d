import random

import pytest

from cazpipe.cazone import CAZone, HP, LP
from cazpipe.geom import PixelBox
from cazpipe.packing import CompositeImage, Placement
from cazpipe.scheduler import (
    Budget,
    InfeasibleBudget,
    LatencyTable,
    guarantee,
    lookup,
    rounded_size,
    simulate_cost,
)

FRAME = (1920, 1280)


def composite(priority, n_zones=1, side=288, x0=0):
    placements = []
    for k in range(n_zones):
        box = PixelBox(x0 + 12 * k, 0, x0 + 12 * k + 10, 10)
        placements.append(
            Placement(zone=CAZone(box=box, depth=30.0, priority=priority),
                      offset=(4 + 14 * k, 4), scale=1.0)
        )
    return CompositeImage(side=side, placements=placements, priority=priority)


class TestTable:
    def test_profiled_cells(self, table):
        assert table.entries[(608, 1)] == 173.0
        assert table.entries[(288, 3)] == 148.0
        assert table.entries[(192, 1)] == 75.0
        assert table.entries[(256, 3)] == 115.0

    def test_unsupported_cells_absent(self, table):
        assert (512, 3) not in table.entries
        assert (288, 5) not in table.entries
        assert lookup(table, 512, 3) is None

    def test_validate_clean(self, table):
        assert table.validate() == []

    def test_validate_flags_nonmonotone(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("batch,192,256\n1,75,60\n2,84,95\n")
        bad = LatencyTable.from_csv(path)
        assert any("drops at size 256" in p for p in bad.validate())

    def test_lookup_rounds_size_up(self, table):
        assert lookup(table, 200, 1) == table.entries[(256, 1)] == 76.0
        assert rounded_size(table, 200) == 256
        assert rounded_size(table, 192) == 192
        assert lookup(table, 700, 1) is None

    def test_lookup_rejects_bad_batch(self, table):
        with pytest.raises(ValueError):
            lookup(table, 192, 0)


class TestGuarantee:
    def test_everything_affordable_is_kept(self, table):
        comps = [composite(HP, side=192)]
        plan = guarantee(comps, table, Budget(140.0), FRAME)
        assert plan.kept == comps
        assert plan.dropped_lp == []
        assert plan.final_size == 192
        assert plan.predicted_ms == 75.0
        assert not plan.fallback_full_frame

    def test_empty_input_empty_plan(self, table):
        plan = guarantee([], table, Budget(140.0), FRAME)
        assert plan.kept == [] and plan.dropped_lp == []
        assert plan.predicted_ms == 0.0

    def test_drop_then_shrink_sequence(self, table):
        # 288-canvas batch of five: batch 5 unsupported -> drop an LP;
        # batch 4 = 186 ms over budget -> drop the other LP; batch 3 =
        # 148 ms still over -> shrink HP batch to 256 where batch 3 = 115 ms.
        comps = [
            composite(HP, n_zones=2),
            composite(HP, n_zones=2),
            composite(HP, n_zones=2),
            composite(LP, n_zones=1),
            composite(LP, n_zones=2),
        ]
        plan = guarantee(comps, table, Budget(140.0), FRAME)
        assert [c.priority for c in plan.kept] == [HP, HP, HP]
        assert len(plan.dropped_lp) == 2
        assert plan.final_size == 256
        assert plan.predicted_ms == 115.0
        assert not plan.fallback_full_frame

    def test_lp_dropped_fewest_zones_first(self, table):
        big_lp = composite(LP, n_zones=3)
        small_lp = composite(LP, n_zones=1)
        comps = [composite(HP, n_zones=2), big_lp, small_lp, composite(HP), composite(HP)]
        plan = guarantee(comps, table, Budget(140.0), FRAME)
        assert plan.dropped_lp[0] is small_lp

    def test_infeasible_budget_raises(self, table):
        with pytest.raises(InfeasibleBudget):
            guarantee([composite(HP)], table, Budget(10.0), FRAME)

    def test_high_coverage_falls_back_to_full_frame(self, table):
        z = CAZone(box=PixelBox(0, 0, 1900, 1200), depth=10.0, priority=HP)
        comp = CompositeImage(
            side=608, placements=[Placement(zone=z, offset=(4, 4), scale=4.0)], priority=HP
        )
        plan = guarantee([comp], table, Budget(140.0), FRAME)
        assert plan.fallback_full_frame
        assert plan.kept == []
        # largest size affordable at batch 1 within 140 ms
        assert plan.final_size == 512
        assert plan.predicted_ms == 127.0

    def test_fallback_when_shrink_cannot_help(self, table):
        # seven HP composites at the smallest size: batch 7 = 145 ms > 140,
        # no LP to drop and nothing smaller to shrink to -> full frame.
        comps = [composite(HP, side=192) for _ in range(7)]
        plan = guarantee(comps, table, Budget(140.0), FRAME)
        assert plan.fallback_full_frame
        assert plan.final_size == 512

    def test_plan_cost_never_exceeds_budget(self, table):
        rng = random.Random(7)
        budget = Budget(140.0)
        for _ in range(300):
            side = rng.choice([192, 256, 288, 352, 416, 512, 608])
            comps = [
                composite(rng.choice([HP, LP]), n_zones=rng.randint(1, 3), side=side)
                for _ in range(rng.randint(1, 8))
            ]
            plan = guarantee(comps, table, budget, FRAME)
            if plan.kept or plan.fallback_full_frame:
                assert simulate_cost(plan, table) <= budget.threshold_ms
            for c in comps:
                if c.priority == HP:
                    assert c not in plan.dropped_lp

    def test_adding_lp_never_drops_hp_or_shrinks_less(self, table):
        rng = random.Random(13)
        budget = Budget(140.0)
        for _ in range(100):
            side = rng.choice([192, 256, 288])
            hp = [composite(HP, n_zones=rng.randint(1, 2), side=side)
                  for _ in range(rng.randint(1, 4))]
            base = guarantee(list(hp), table, budget, FRAME)
            extra = composite(LP, n_zones=rng.randint(1, 3), side=side)
            more = guarantee(hp + [extra], table, budget, FRAME)
            if base.fallback_full_frame or more.fallback_full_frame:
                continue
            kept_hp = [c for c in more.kept if c.priority == HP]
            assert kept_hp == hp
            assert more.final_size >= base.final_size
