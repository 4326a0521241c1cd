import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_node, make_task
from edgedelta.domain import (
    DEFAULT_ALPHA, Ablation, ConfigError, EfficiencyMatrix, Hardware, Model, SimConfig,
    efficiency_lookup, validate_config,
)


class TestTaskAndNode:
    def test_task_requires_unit_input(self):
        with pytest.raises(ValueError, match="norm"):
            from edgedelta.domain import Task
            Task(0, 0, np.array([2.0, 0.0]), Model.BERT, 1.0, 100.0, 0.0, 1.0)

    @pytest.mark.parametrize("field", ["w", "deadline"])
    def test_task_rejects_nonpositive(self, field):
        with pytest.raises(ValueError):
            make_task(**{field: 0.0})

    def test_node_needs_models_and_capacity(self):
        with pytest.raises(ValueError, match="hosted_models"):
            make_node(models=())
        with pytest.raises(ValueError, match="capacity"):
            make_node(cap=0.0)

    def test_queued_gflop_sums_queue(self):
        n = make_node(queue=[(1, 2.5), (2, 4.0)])
        assert n.queued_gflop() == 6.5


class TestEfficiency:
    def test_lookup_matches_table(self):
        mat = EfficiencyMatrix()
        for (m, h), v in DEFAULT_ALPHA.items():
            assert mat.lookup(m, h) == v

    def test_unknown_pair_uses_default(self):
        mat = EfficiencyMatrix(alpha={}, default_alpha=0.3)
        assert efficiency_lookup(Model.BERT, Hardware.GPU, mat) == 0.3
        assert efficiency_lookup("NOPE", "GPU", mat) == 0.3

    def test_values_bounded(self):
        assert all(0.1 <= v <= 1.0 for v in DEFAULT_ALPHA.values())
        with pytest.raises(ValueError):
            EfficiencyMatrix(alpha={(Model.BERT, Hardware.GPU): 1.5})

    def test_max_alpha(self):
        assert EfficiencyMatrix().max_alpha(Model.YOLOV5) == 0.95


class TestConfig:
    def test_round_trip_is_byte_identical(self):
        cfg = SimConfig(theta=0.55, seed=7, ablation=Ablation(enable_cache=False))
        text = cfg.to_json()
        again = SimConfig.from_json(text)
        assert again == cfg
        assert again.to_json() == text

    @settings(max_examples=50, deadline=None)
    @given(theta=st.floats(0.01, 0.99), seed=st.integers(0, 2**63), p=st.integers(1, 10),
           cache=st.booleans())
    def test_round_trip_property(self, theta, seed, p, cache):
        cfg = SimConfig(theta=theta, seed=seed, top_p=p, ablation=Ablation(enable_cache=cache))
        assert SimConfig.from_json(cfg.to_json()).to_json() == cfg.to_json()

    def test_unknown_keys_rejected(self):
        d = SimConfig().to_dict()
        d["bogus"] = 1
        d["ablation"]["nope"] = True
        with pytest.raises(ConfigError) as e:
            SimConfig.from_dict(d)
        assert len(e.value.errors) == 2

    def test_overrides_dot_path(self):
        cfg = SimConfig().with_overrides({"ablation.enable_cache": False, "theta": 0.7})
        assert cfg.ablation.enable_cache is False and cfg.theta == 0.7
        with pytest.raises(ConfigError):
            SimConfig().with_overrides({"ablation.missing": 1})

    def test_validation_collects_all_errors(self):
        with pytest.raises(ConfigError) as e:
            validate_config(SimConfig(theta=1.5, top_p=0, policy="x"))
        msgs = e.value.errors
        assert "theta out of (0,1)" in msgs and "top_p must be ≥ 1" in msgs
        assert any(m.startswith("policy") for m in msgs)

    @pytest.mark.parametrize("theta", [0.0, 1.0, -0.2])
    def test_theta_bounds(self, theta):
        with pytest.raises(ConfigError, match="theta"):
            validate_config(SimConfig(theta=theta))

    def test_zero_agents_clamped(self):
        cfg = validate_config(SimConfig(n_agents=0, n_nodes=0))
        assert cfg.n_agents == 1 and cfg.n_nodes == 1

    def test_json_keys_sorted(self):
        keys = list(json.loads(SimConfig().to_json()))
        assert keys == sorted(keys)
