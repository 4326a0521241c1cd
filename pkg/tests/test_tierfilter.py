import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_node, make_task
from edgedelta.domain import Ablation, EfficiencyMatrix, Hardware, Model, SimConfig
from edgedelta.tierfilter import (
    TierPlan, filter_and_select, tier1_model_availability, tier2_hardware_affinity, tier3_proximity,
)
from edgedelta.workload import generate_fleet, generate_tasks

MAT = EfficiencyMatrix()


def _fleet():
    Y, B = Model.YOLOV5, Model.BERT
    return [
        make_node(0, hw=Hardware.CPU, models=(Y,), link=(1.0,)),
        make_node(1, hw=Hardware.GPU, models=(Y, B), link=(9.0,)),
        make_node(2, hw=Hardware.NPU, models=(Y,), link=(4.0,)),
        make_node(3, hw=Hardware.GPU, models=(B,), link=(2.0,)),
        make_node(4, hw=Hardware.FPGA, models=(Y,), link=(3.0,), cap=300.0),
    ]


class TestTiers:
    def test_tier1(self):
        assert tier1_model_availability(make_task(model=Model.BERT), _fleet()) == [1, 3]

    def test_tier2_by_affinity(self):
        # YOLO alpha: GPU .95, NPU .68, FPGA .45, CPU .22
        assert tier2_hardware_affinity(make_task(), [0, 1, 2, 4], MAT, 3, _fleet()) == [1, 2, 4]

    def test_tier2_by_capacity(self):
        got = tier2_hardware_affinity(make_task(), [0, 1, 2, 4], MAT, 1, _fleet(), by_capacity=True)
        assert got == [4]

    def test_tier2_p_validated(self):
        with pytest.raises(ValueError):
            tier2_hardware_affinity(make_task(), [0], MAT, 0, _fleet())

    def test_tier3_proximity_and_ties(self):
        nodes = _fleet()
        assert tier3_proximity(make_task(), [1, 2, 4], nodes, max_link_ms=10.0) == 4
        nodes[4].load = 0.5
        assert tier3_proximity(make_task(), [1, 2, 4], nodes, max_link_ms=10.0) == 2
        twins = [make_node(7, link=(3.0,)), make_node(5, link=(3.0,))]
        assert tier3_proximity(make_task(), [7, 5], twins) == 5

    def test_fallback_when_no_host(self):
        nodes = [make_node(0, models=(Model.BERT,)), make_node(1, models=(Model.BERT,))]
        tr = filter_and_select(make_task(model=Model.YOLOV5), nodes, MAT, SimConfig(top_p=1))
        assert tr.fallback_used and tr.tier1_survivors == ()

    def test_filter_disabled_keeps_all(self):
        cfg = SimConfig(ablation=Ablation(enable_filter=False))
        tr = filter_and_select(make_task(), _fleet(), MAT, cfg)
        assert tr.tier2_survivors == (0, 1, 2, 3, 4) and tr.candidates_evaluated == 5


class TestContainment:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10**6), p=st.integers(1, 6))
    def test_candidates_at_most_p_and_match_plan(self, seed, p):
        cfg = SimConfig(n_agents=20, n_nodes=12, top_p=p, seed=seed)
        rng = np.random.default_rng(seed)
        nodes = generate_fleet(cfg, rng)
        tasks = generate_tasks("visdrone", 20, 30_000, rng, dim=16)
        plan = TierPlan(nodes, MAT, cfg)
        loads = rng.random(len(nodes))
        for n, l in zip(nodes, loads):
            n.load = float(l)
        for t in tasks[:40]:
            ref = filter_and_select(t, nodes, MAT, cfg)
            got = plan.trace(t, loads)
            assert got.candidates_evaluated <= p
            assert set(got.tier2_survivors) <= set(got.tier1_survivors or range(len(nodes)))
            assert (got.tier2_survivors, got.chosen) == (tuple(ref.tier2_survivors), ref.chosen)
