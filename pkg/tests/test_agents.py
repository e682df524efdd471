import numpy as np
import pytest

from wanderseg.agents import (
    AgentState,
    OracleAgent,
    RandomAgent,
    UniformAgent,
    motion_controller,
)
from wanderseg.perception import SegMask, SegModel
from wanderseg.planner import PolarGoal, polar_goal
from wanderseg.world import Action, Pose, step

from conftest import box_scene
from test_perception import identity_model, onehot_obs


def make_state(obs=None, polar=PolarGoal(1.0, 0.0), step_index=1, n_classes=4):
    if obs is None:
        obs = onehot_obs([0], [0], n_classes)
    return AgentState(obs=obs, seg=SegMask(ids=obs.gt_mask, probs=None),
                      propagated=np.full(len(obs.gt_mask), n_classes),
                      polar=polar, step_index=step_index, annotation_count=0)


class TestMotionController:
    def test_aligned_moves_forward(self):
        assert motion_controller(PolarGoal(1.0, 0.0), 30) == Action.MOVE_FORWARD

    def test_within_half_turn_moves(self):
        assert motion_controller(PolarGoal(1.0, np.deg2rad(14.9)), 30) == \
            Action.MOVE_FORWARD

    def test_left_of_heading_rotates_left(self):
        assert motion_controller(PolarGoal(1.0, np.pi / 2), 30) == Action.ROTATE_LEFT

    def test_right_of_heading_rotates_right(self):
        assert motion_controller(PolarGoal(1.0, -np.pi / 2), 30) == Action.ROTATE_RIGHT

    def test_directly_behind_ties_left(self):
        assert motion_controller(PolarGoal(1.0, np.pi), 30) == Action.ROTATE_LEFT

    def test_zero_range_rejected(self):
        with pytest.raises(ValueError):
            motion_controller(PolarGoal(0.0, 0.0), 30)

    def test_reaches_goal_on_open_grid(self):
        # simulation oracle: controller alone reaches any goal cell within
        # manhattan-hops + headings steps on an obstacle-free map
        scene = box_scene(rows=14, cols=14)
        p = scene.params
        rng = np.random.default_rng(0)
        cells = scene.free_cells()
        for _ in range(25):
            r0, c0 = cells[rng.integers(len(cells))]
            gr, gc = cells[rng.integers(len(cells))]
            pose = Pose(r0, c0, int(rng.integers(p.n_headings)))
            hops = abs(gr - r0) + abs(gc - c0)
            budget = hops + p.n_headings
            steps = 0
            while (pose.row, pose.col) != (gr, gc) and steps <= budget:
                pg = polar_goal(pose, (gr, gc), p.cell_size, p.n_headings)
                pose = step(scene, pose, motion_controller(pg, p.turn_angle_deg))
                steps += 1
            assert (pose.row, pose.col) == (gr, gc), \
                f"goal ({gr},{gc}) not reached from ({r0},{c0}) in {budget} steps"


class TestOracle:
    def _model_with_accuracy(self, acc_pct):
        # identity model predicts class 0 on every pixel; gt controls accuracy
        gt = [0] * acc_pct + [1] * (100 - acc_pct)
        obs = onehot_obs([0] * 100, gt, 4)
        return identity_model(4), obs

    def test_annotates_below_threshold(self):
        model, obs = self._model_with_accuracy(69)
        agent = OracleAgent(30, threshold=0.7)
        assert agent.act(make_state(obs), model) == Action.ANNOTATE

    def test_moves_at_or_above_threshold(self):
        model, obs = self._model_with_accuracy(71)
        agent = OracleAgent(30, threshold=0.7)
        assert agent.act(make_state(obs), model) == Action.MOVE_FORWARD

    def test_exact_threshold_is_not_below(self):
        model, obs = self._model_with_accuracy(70)
        agent = OracleAgent(30, threshold=0.7)
        assert agent.act(make_state(obs), model) == Action.MOVE_FORWARD

    def test_no_cooldown_between_annotations(self):
        model, obs = self._model_with_accuracy(60)
        agent = OracleAgent(30, threshold=0.7)
        state = make_state(obs)
        assert agent.act(state, model) == Action.ANNOTATE
        assert agent.act(state, model) == Action.ANNOTATE

    @pytest.mark.parametrize("threshold", [0.6, 0.7, 0.8])
    def test_threshold_configurable(self, threshold):
        model, obs = self._model_with_accuracy(int(threshold * 100) - 1)
        agent = OracleAgent(30, threshold=threshold)
        assert agent.act(make_state(obs), model) == Action.ANNOTATE


class TestUniform:
    def test_every_20th_step(self):
        agent = UniformAgent(30, period=20)
        model = identity_model(4)
        assert agent.act(make_state(step_index=20), model) == Action.ANNOTATE
        assert agent.act(make_state(step_index=19), model) == Action.MOVE_FORWARD

    def test_count_over_capped_episode(self):
        agent = UniformAgent(30, period=20)
        model = identity_model(4)
        annots = sum(
            agent.act(make_state(step_index=i), model) == Action.ANNOTATE
            for i in range(1, 2001)
        )
        assert annots == 100


class TestRandom:
    def test_never_with_p_zero(self):
        agent = RandomAgent(30, p_annotate=0.0)
        model = identity_model(4)
        assert all(agent.act(make_state(), model) != Action.ANNOTATE
                   for _ in range(500))

    def test_always_with_p_one(self):
        agent = RandomAgent(30, p_annotate=1.0)
        model = identity_model(4)
        assert all(agent.act(make_state(), model) == Action.ANNOTATE
                   for _ in range(500))

    def test_empirical_rate(self):
        agent = RandomAgent(30, p_annotate=0.05, seed=123)
        agent.reset(0)
        model = identity_model(4)
        n = 100_000
        hits = sum(agent.act(make_state(), model) == Action.ANNOTATE
                   for _ in range(n))
        assert hits / n == pytest.approx(0.05, abs=0.005)

    def test_reset_reproducible(self):
        model = identity_model(4)

        def draws():
            agent = RandomAgent(30, p_annotate=0.3, seed=5)
            agent.reset(9)
            return [agent.act(make_state(), model) for _ in range(50)]

        assert draws() == draws()


def test_scan_rotation_when_standing_on_goal():
    agent = UniformAgent(30)
    state = make_state(polar=PolarGoal(0.0, 0.0), step_index=3)
    assert agent.act(state, identity_model(4)) == Action.ROTATE_LEFT
