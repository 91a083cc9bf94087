import pytest

from qwalks.src.asymptotics import ClusterProfile
from qwalks.src.walks import WalkConfig


@pytest.fixture
def single_cluster() -> ClusterProfile:
    return ClusterProfile(a=[0.0, 1.0], C=[0.5], gamma=1.0)


@pytest.fixture
def two_walks() -> WalkConfig:
    return WalkConfig((3, 1))


@pytest.fixture
def three_walks() -> WalkConfig:
    return WalkConfig((5, 3, 0))


@pytest.fixture
def four_clusters() -> ClusterProfile:
    return ClusterProfile(a=[0.0, 0.1, 0.2, 0.6, 1.0], C=[0.05, 0.45, 0.8, 1.0], gamma=1.0)
