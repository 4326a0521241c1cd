import numpy as np
import pytest

from edgedelta.domain import EdgeNode, Hardware, Model, Task


def unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def make_task(id=0, agent=0, x=None, model=Model.YOLOV5, w=10.0, deadline=100.0,
              arrival=0.0, size=1.0, dim=8):
    if x is None:
        x = np.eye(dim)[0]
    return Task(id=id, agent_id=agent, input=unit(x), model_id=model, workload_gflop=w,
                deadline_ms=deadline, arrival_ms=arrival, input_size_mbit=size)


def make_node(id=0, cap=100.0, hw=Hardware.GPU, models=(Model.YOLOV5,), link=(5.0,),
              bw=(100.0,), **kw):
    return EdgeNode(id=id, capacity_gflops=cap, hardware=hw, hosted_models=frozenset(models),
                    link_latency_ms=np.asarray(link, float), bandwidth_mbps=np.asarray(bw, float), **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
