"""
Fixtures compartidas: el Panda incluido, un brazo planar de geometría simple
para el ejecutivo, un roadmap sobre (q1, q2) y un modelo pequeño entrenado.
"""

import math

import numpy as np
import pytest

from latentroute.engine.autoencoder import train
from latentroute.engine.dataset import generate, rebalance, split
from latentroute.engine.kinematics import load_robot
from latentroute.engine.roadmap import build_knn
from latentroute.schemas.robot import CapsuleSpec, DhRow, JointLimit, RobotModel
from latentroute.schemas.roadmap import LatentPoint
from latentroute.schemas.training import TrainConfig


WORKSPACE_BOX = ((-0.8, 0.8), (-0.8, 0.8), (0.0, 1.2))

# Brazo planar: eslabón de 0.5 m, eslabón de 0.3 m y una mano de 0.13 m
PLANAR_A = (0.0, 0.5, 0.3, 0.02, 0.02, 0.02, 0.02)
PLANAR_RADIUS = 0.03


# =====================================================
# ROBOTS
# =====================================================

@pytest.fixture(scope="session")
def panda() -> RobotModel:
    return load_robot()


@pytest.fixture(scope="session")
def relaxed_panda(panda) -> RobotModel:
    """Panda con límites [-pi, pi]: admite q = 0"""
    return RobotModel(
        name="panda-relaxed",
        dh_rows=panda.dh_rows,
        joint_limits=[JointLimit(lower=-math.pi, upper=math.pi)] * 7,
        capsules=panda.capsules,
    )


def planar_robot() -> RobotModel:
    rows = [DhRow(a=a, d=0.0, alpha=0.0) for a in PLANAR_A]
    lengths = list(PLANAR_A[1:]) + [0.05]
    capsules = [CapsuleSpec(radius=PLANAR_RADIUS, a=[0.0, 0.0, 0.0], b=[length, 0.0, 0.0]) for length in lengths]
    return RobotModel(
        name="planar",
        dh_rows=rows,
        joint_limits=[JointLimit(lower=-math.pi, upper=math.pi)] * 7,
        capsules=capsules,
    )


@pytest.fixture(scope="session")
def planar() -> RobotModel:
    return planar_robot()


# =====================================================
# ROADMAP SINTÉTICO
# =====================================================

class JointEncoder:
    """Encoder de prueba: el punto latente es (q1, q2) del vector crudo"""

    def encode_state(self, raw):
        return np.asarray(raw, dtype=float)[:2].copy()

    def default_obstacle_position(self):
        return np.zeros(3)


def grid_points(q1_values, q2_values):
    points = []
    for q2 in q2_values:
        for q1 in q1_values:
            joints = [float(q1), float(q2), 0.0, 0.0, 0.0, 0.0, 0.0]
            points.append(LatentPoint(coords=[float(q1), float(q2)], decoded_joints=joints))
    return points


def grid_axis(lo: float, hi: float, step: float = 0.1) -> np.ndarray:
    return np.round(np.linspace(lo, hi, int(round((hi - lo) / step)) + 1), 10)


@pytest.fixture(scope="session")
def joint_encoder() -> JointEncoder:
    return JointEncoder()


@pytest.fixture(scope="session")
def joint_roadmap():
    """Grilla (q1, q2) en [-1.5, 1.5]² con paso 0.1, 8-conectada"""
    axis = grid_axis(-1.5, 1.5)
    return build_knn(grid_points(axis, axis), k=8)


# =====================================================
# MODELO PEQUEÑO
# =====================================================

@pytest.fixture(scope="session")
def small_dataset(panda):
    d = generate(panda, 400, WORKSPACE_BOX, seed=11, focus_fraction=0.5)
    return rebalance(d, 0.3, seed=11)


@pytest.fixture(scope="session")
def small_split(small_dataset):
    return split(small_dataset, 0.8, seed=11)


@pytest.fixture(scope="session")
def small_config() -> TrainConfig:
    return TrainConfig(hidden_sizes=[16, 8], epochs=3, batch_size=32, seed=5)


@pytest.fixture(scope="session")
def small_model(small_split, small_config):
    train_part, heldout = small_split
    model, _ = train(train_part, small_config, heldout=heldout)
    return model
