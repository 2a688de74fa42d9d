import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles helper module

from cazpipe import data_path
from cazpipe.pipeline import load_config, run_frame
from cazpipe.scene import load_scene
from cazpipe.scheduler import LatencyTable


@pytest.fixture(scope="session")
def config():
    return load_config(data_path("default_config.json"))


@pytest.fixture(scope="session")
def table():
    return LatencyTable.from_csv(data_path("gpu_latency.csv"))


@pytest.fixture(scope="session")
def bundled_scenes():
    files = sorted(Path(str(data_path("scenes"))).glob("highway_*.json"))
    assert len(files) == 20
    return [load_scene(f) for f in files]


@pytest.fixture(scope="session")
def bundled_reports(bundled_scenes, config):
    """One pipeline run per bundled scene, shared by the end-to-end tests."""
    return [
        run_frame(sc, config, frame_id=i, keep_artifacts=True)
        for i, sc in enumerate(bundled_scenes)
    ]
