"""Adaptive cost-weight agent: observation, reward, SAC learner and training."""

from .checkpoint import CheckpointError, infer_weights, load_checkpoint, save_checkpoint
from .env import WeightEnv
from .observation import (ACTION_ORDER, OBS_DIM, ActionSpec, action_from_weights, build_observation,
                          weights_from_action)
from .replay import ReplayBuffer
from .reward import RewardBreakdown, RewardCoefficients, reward
from .sac import Batch, SACAgent, SACConfig, sac_update
from .train import TrainConfig, train

__all__ = [
    "ACTION_ORDER", "OBS_DIM", "ActionSpec", "Batch", "CheckpointError", "ReplayBuffer", "RewardBreakdown",
    "RewardCoefficients", "SACAgent", "SACConfig", "TrainConfig", "WeightEnv", "action_from_weights",
    "build_observation", "infer_weights", "load_checkpoint", "reward", "sac_update", "save_checkpoint",
    "train", "weights_from_action",
]
