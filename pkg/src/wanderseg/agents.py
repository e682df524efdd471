"""Agent interface, the shortest-path motion controller, and the three
heuristic annotation baselines.

All heuristics move identically (rotate toward the active local goal,
then step forward); they differ only in when they request annotations.
"""

import math
from dataclasses import dataclass

import numpy as np

from .perception import SegModel, SegMask, accuracy
from .planner import PolarGoal
from .world import Action, Observation


@dataclass
class AgentState:
    obs: Observation
    seg: SegMask            # current model's prediction for obs
    propagated: np.ndarray  # last annotation warped into this view (no-label id = n_classes)
    polar: PolarGoal        # active local goal
    step_index: int         # 1-based, counts every action
    annotation_count: int


def motion_controller(polar: PolarGoal, turn_angle_deg: float) -> Action:
    """Rotate until the goal is within half a turn of straight ahead, then
    move. Rotation follows the sign of the bearing error (ties go left)."""
    if polar.r <= 0:
        raise ValueError("motion controller needs a goal at positive range")
    half_turn = math.radians(turn_angle_deg) / 2.0
    if abs(polar.phi) <= half_turn:
        return Action.MOVE_FORWARD
    return Action.ROTATE_LEFT if polar.phi > 0 else Action.ROTATE_RIGHT


class AgentPolicy:
    """Per-episode policy; act() must be deterministic given the state and
    the agent's internal RNG state."""

    name = "base"

    def __init__(self, turn_angle_deg: float = 30.0):
        self.turn_angle_deg = turn_angle_deg

    def reset(self, seed: int = 0):
        pass

    def act(self, state: AgentState, model: SegModel) -> Action:
        raise NotImplementedError

    def _motion(self, state: AgentState) -> Action:
        # standing on the goal: scan in place until the planner moves on
        if state.polar.r <= 0:
            return Action.ROTATE_LEFT
        return motion_controller(state.polar, self.turn_angle_deg)


class OracleAgent(AgentPolicy):
    """Annotates whenever current-view accuracy drops below the threshold.
    Requires ground truth, so it is an upper-bound reference."""

    name = "oracle"

    def __init__(self, turn_angle_deg: float = 30.0, threshold: float = 0.7):
        super().__init__(turn_angle_deg)
        self.threshold = threshold

    def act(self, state, model):
        if accuracy(model, state.obs) < self.threshold:
            return Action.ANNOTATE
        return self._motion(state)


class UniformAgent(AgentPolicy):
    """Annotates on every period-th step, counting all actions."""

    name = "uniform"

    def __init__(self, turn_angle_deg: float = 30.0, period: int = 20):
        super().__init__(turn_angle_deg)
        self.period = period

    def act(self, state, model):
        if state.step_index % self.period == 0:
            return Action.ANNOTATE
        return self._motion(state)


class RandomAgent(AgentPolicy):
    """Annotates with fixed probability per step."""

    name = "random"

    def __init__(self, turn_angle_deg: float = 30.0, p_annotate: float = 0.05, seed: int = 0):
        super().__init__(turn_angle_deg)
        self.p_annotate = p_annotate
        self._seed = seed
        self._rng = np.random.default_rng(seed)

    def reset(self, seed: int = 0):
        self._rng = np.random.default_rng(np.random.SeedSequence([self._seed, seed]))

    def act(self, state, model):
        if self._rng.random() < self.p_annotate:
            return Action.ANNOTATE
        return self._motion(state)
