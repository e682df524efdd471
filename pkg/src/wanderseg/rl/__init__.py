from .rewards import RewardConfig, exploration_reward, perception_reward, total_reward
from .propagation import NO_LABEL_OFFSET, propagate_mask

__all__ = [
    "RewardConfig",
    "exploration_reward",
    "perception_reward",
    "total_reward",
    "propagate_mask",
    "NO_LABEL_OFFSET",
]
