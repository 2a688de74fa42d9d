"""LiDAR-cluster-first, camera-inference-later detection pipeline at desk scale."""

from importlib import resources

__version__ = "0.1.0"


def data_path(name: str):
    """Path to a bundled data file (latency table, default config, scenes)."""
    return resources.files(__package__).joinpath("data").joinpath(name)
