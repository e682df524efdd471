"""Reward terms for the learnable agent: a perception reward paid only on
annotation steps, a goal-seeking exploration reward, and their convex
combination."""

import math
from dataclasses import dataclass

from ..perception import SegModel, accuracy, miou
from ..planner import GoalDistanceCache


@dataclass
class RewardConfig:
    eps_ann: float = 0.01      # per-annotation penalty
    lambda_acc: float = 0.01   # bonus weight for annotating a poorly-segmented view
    tau_acc: float = 0.7       # accuracy threshold for that bonus
    lambda_goal: float = 1.0   # bonus for reaching the local goal
    eps_goal: float = 1.0      # meters; local goal counts as reached inside this
    mix: float = 0.01          # weight of exploration in the total reward

    def __post_init__(self):
        if not (0.0 <= self.mix <= 1.0):
            raise ValueError("mix must be in [0, 1]")
        if min(self.eps_ann, self.lambda_acc, self.lambda_goal) < 0:
            raise ValueError("penalties and bonuses must be >= 0")


def perception_reward(model_before: SegModel, model_after: SegModel,
                      ref_views, obs, did_annotate: bool,
                      cfg: RewardConfig, class_subset) -> float:
    """Zero unless the step annotated; otherwise the reference-view mIoU
    improvement minus the annotation penalty, plus a bonus when the
    pre-refinement view accuracy was below threshold."""
    if not did_annotate:
        return 0.0
    gain = miou(model_after, ref_views, class_subset) - miou(model_before, ref_views, class_subset)
    bonus = cfg.lambda_acc if accuracy(model_before, obs) < cfg.tau_acc else 0.0
    return gain - cfg.eps_ann + bonus


def exploration_reward(prev_cell, new_cell, goal, occ, cfg: RewardConfig,
                       cache: GoalDistanceCache = None) -> tuple:
    """Geodesic progress toward the local goal plus an arrival bonus.

    Returns (reward, reached, replan). An unreachable goal on the current
    map yields reward 0 and a replan signal.
    """
    if cache is None:
        cache = GoalDistanceCache()
    d_prev = cache.distance(occ, goal, prev_cell)
    d_new = cache.distance(occ, goal, new_cell)
    if math.isinf(d_prev) or math.isinf(d_new):
        return 0.0, False, True
    reached = d_new < cfg.eps_goal
    reward = d_prev - d_new + (cfg.lambda_goal if reached else 0.0)
    return reward, reached, False


def total_reward(r_exp: float, r_seg: float, cfg: RewardConfig) -> float:
    return cfg.mix * r_exp + (1.0 - cfg.mix) * r_seg
