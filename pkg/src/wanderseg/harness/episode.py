"""Episode orchestration: mapping, frontier plans, annotation refinement,
rewards and logging, plus the episodic/lifelong sequence runner.

Each step: observe and update the map, check termination, maintain the
plan (advance reached waypoints, replan when stale), let the agent act,
then apply the action. Annotations refine the model in place of movement;
exploration rewards are computed on the post-step map so both endpoints
of the geodesic are known cells.
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from ..agents import AgentState
from ..mapper import OccupancyMap
from ..perception import (
    RefineParams,
    SegModel,
    TrainSet,
    accuracy,
    init_model,
    miou,
    predict,
    refine,
    top_common_classes,
)
from ..planner import (
    GoalDistanceCache,
    NavPlan,
    PolarGoal,
    Unreachable,
    frontier_points,
    polar_goal,
    select_frontier,
    shortest_path,
    split_by_curvature,
)
from ..rl.propagation import propagate_mask
from ..rl.rewards import RewardConfig, total_reward
from ..world import (
    Action,
    Pose,
    Scene,
    render_view,
    sample_reference_views,
    sample_start_pose,
    step as world_step,
    total_navigable_area,
)


@dataclass
class EpisodeConfig:
    max_steps: int = 2000
    n_ref_views: int = 32
    ref_seed: int = 20
    reward_cfg: RewardConfig = field(default_factory=RewardConfig)
    refine_params: RefineParams = field(default_factory=RefineParams)
    replan_on_collision: bool = True
    coverage_reward: bool = False   # replace goal rewards with newly-mapped area
    coverage_coef: float = 1.0


@dataclass
class StepRecord:
    step_index: int
    action: int
    row: int
    col: int
    heading: int
    explored_m2: float
    annotated: bool
    r_exp: float
    r_seg: float


@dataclass
class EpisodeLog:
    scene_id: str
    agent: str
    setup: str
    steps: list
    miou_initial: float
    miou_checkpoints: list      # i-th entry: mIoU right after annotation i+1
    miou_final: float
    annotation_count: int
    motion_steps: int
    terminated_by: str          # 'explored' or 'step_cap'
    max_steps: int
    total_navigable_m2: float
    final_explored_m2: float
    map_ascii: str

    def to_dict(self):
        d = asdict(self)
        d["steps"] = [
            [s.step_index, s.action, s.row, s.col, s.heading,
             s.explored_m2, s.annotated, s.r_exp, s.r_seg]
            for s in self.steps
        ]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["steps"] = [
            StepRecord(step_index=s[0], action=s[1], row=s[2], col=s[3],
                       heading=s[4], explored_m2=s[5], annotated=s[6],
                       r_exp=s[7], r_seg=s[8])
            for s in d["steps"]
        ]
        return cls(**d)


@dataclass
class StepOutcome:
    state: AgentState   # None once the episode is done
    r_exp: float
    r_seg: float
    r_total: float
    done: bool
    annotated: bool
    collided: bool


class EpisodeAbort(Exception):
    pass


class EpisodeEngine:
    """Drives one episode; the caller supplies actions (an AgentPolicy or
    an RL policy being trained)."""

    def __init__(self, scene: Scene, model: SegModel, trainset: TrainSet,
                 cfg: EpisodeConfig, ref_views=None, class_subset=None,
                 start_pose: Pose = None):
        self.scene = scene
        self.model = model
        self.trainset = trainset
        self.cfg = cfg
        self.params = scene.params
        self.ref_views = (ref_views if ref_views is not None
                          else sample_reference_views(scene, cfg.n_ref_views, cfg.ref_seed))
        self.class_subset = (class_subset if class_subset is not None
                             else top_common_classes(self.ref_views, self.params.top_k))
        self.pose = start_pose if start_pose is not None else sample_start_pose(scene)

        self.occ = OccupancyMap.for_scene(scene)
        self.plan: NavPlan = None
        self.dist_cache = GoalDistanceCache()
        self.step_index = 0
        self.annotation_count = 0
        self.motion_steps = 0
        self.last_annotation = None
        self.done = False
        self.terminated_by = None
        self.records = []
        self.miou_checkpoints = []
        self._suppress_advance = False
        self._cur_obs = None
        self._prev_area = 0.0
        self._cur_miou = miou(model, self.ref_views, self.class_subset)
        self.miou_initial = self._cur_miou

    # -- plan maintenance -------------------------------------------------

    def _cell(self):
        return (self.pose.row, self.pose.col)

    def _waypoint_reached(self, wp):
        if self.plan.exact_arrival or self.plan.advance_locked:
            return self._cell() == wp
        return self.dist_cache.distance(self.occ, wp, self._cell()) < self.cfg.reward_cfg.eps_goal

    def _advance_plan(self):
        while self.plan is not None:
            if not self._waypoint_reached(self.plan.active_waypoint):
                return
            if self.plan.on_last_waypoint:
                self.plan = None
            else:
                self.plan.active_index += 1

    def _maintain(self):
        if not frontier_points(self.occ):
            self.done = True
            self.terminated_by = "explored"
            self.plan = None
            return
        if self.cfg.coverage_reward:
            self.plan = None
            return
        if self.plan is not None and not self.plan.is_valid(self.occ):
            self.plan = None
        if self.plan is not None:
            self._advance_plan()
        if self.plan is None:
            goal = select_frontier(self.occ, self.pose)
            if goal is None:   # frontiers exist but none reachable
                self.done = True
                self.terminated_by = "explored"
                return
            try:
                path = shortest_path(self.occ, self._cell(), goal)
            except Unreachable:
                self.done = True
                self.terminated_by = "explored"
                return
            plan = NavPlan(frontier_goal=goal, waypoints=split_by_curvature(path))
            if self._suppress_advance:
                plan.advance_locked = True
                self._suppress_advance = False
            if self.dist_cache.distance(self.occ, goal, self._cell()) < self.cfg.reward_cfg.eps_goal:
                plan.exact_arrival = True
            self.plan = plan
            self._advance_plan()

    # -- stepping ----------------------------------------------------------

    def _observe(self):
        self._cur_obs = render_view(self.scene, self.pose)
        self.occ.update(self._cur_obs)

    def _build_state(self):
        seg = predict(self.model, self._cur_obs)
        prop = propagate_mask(self.last_annotation, self._cur_obs, self.params.n_classes)
        if self.plan is not None:
            polar = polar_goal(self.pose, self.plan.active_waypoint,
                               self.params.cell_size, self.params.n_headings)
        else:
            polar = PolarGoal(0.0, 0.0)
        return AgentState(
            obs=self._cur_obs, seg=seg, propagated=prop, polar=polar,
            step_index=self.step_index, annotation_count=self.annotation_count,
        )

    def begin(self) -> AgentState:
        self._observe()
        self._prev_area = self.occ.explored_area()
        self._maintain()
        self.step_index = 1
        return None if self.done else self._build_state()

    def apply(self, action) -> StepOutcome:
        if self.done:
            raise EpisodeAbort("apply() called on a finished episode")
        try:
            action = Action(action)
        except ValueError:
            raise EpisodeAbort(
                f"agent emitted invalid action {action!r} at step "
                f"{self.step_index} in {self.scene.id}"
            )

        obs = self._cur_obs
        goal_t = self.plan.active_waypoint if self.plan is not None else None
        prev_cell = self._cell()
        area_before = self._prev_area
        annotated = action == Action.ANNOTATE
        collided = False
        r_seg = 0.0

        if annotated:
            gt = obs.gt_mask.copy()
            model_before = self.model
            self.model = refine(model_before, self.trainset, (obs, gt),
                                self.cfg.refine_params)
            miou_after = miou(self.model, self.ref_views, self.class_subset)
            acc_bonus = (self.cfg.reward_cfg.lambda_acc
                         if accuracy(model_before, obs) < self.cfg.reward_cfg.tau_acc
                         else 0.0)
            r_seg = (miou_after - self._cur_miou) - self.cfg.reward_cfg.eps_ann + acc_bonus
            self._cur_miou = miou_after
            self.last_annotation = (obs, gt)
            self.annotation_count += 1
            self.miou_checkpoints.append(miou_after)
        else:
            self.motion_steps += 1
            new_pose = world_step(self.scene, self.pose, action)
            collided = action == Action.MOVE_FORWARD and new_pose == self.pose
            if new_pose != self.pose:
                self.pose = new_pose
                self._observe()
            if collided and self.cfg.replan_on_collision:
                self.plan = None
                self._suppress_advance = True
            if action == Action.MOVE_FORWARD and not collided and self.plan is not None:
                self.plan.advance_locked = False

        # exploration reward on the post-step map
        if self.cfg.coverage_reward:
            r_exp = self.cfg.coverage_coef * (self.occ.explored_area() - area_before)
        elif goal_t is None:
            r_exp = 0.0
        else:
            d_prev = self.dist_cache.distance(self.occ, goal_t, prev_cell)
            d_new = self.dist_cache.distance(self.occ, goal_t, self._cell())
            if math.isinf(d_prev) or math.isinf(d_new):
                r_exp = 0.0
                self.plan = None
            else:
                r_exp = d_prev - d_new
                if d_new < self.cfg.reward_cfg.eps_goal:
                    r_exp += self.cfg.reward_cfg.lambda_goal
        r_tot = total_reward(r_exp, r_seg, self.cfg.reward_cfg)
        self._prev_area = self.occ.explored_area()

        self.records.append(StepRecord(
            step_index=self.step_index, action=int(action),
            row=self.pose.row, col=self.pose.col, heading=self.pose.heading,
            explored_m2=self._prev_area, annotated=annotated,
            r_exp=r_exp, r_seg=r_seg,
        ))

        if self.step_index >= self.cfg.max_steps:
            self.done = True
            self.terminated_by = "step_cap"
        if not self.done:
            self._maintain()
        if self.done:
            return StepOutcome(None, r_exp, r_seg, r_tot, True, annotated, collided)
        self.step_index += 1
        return StepOutcome(self._build_state(), r_exp, r_seg, r_tot, False,
                           annotated, collided)

    def build_log(self, agent_name: str, setup: str) -> EpisodeLog:
        return EpisodeLog(
            scene_id=self.scene.id,
            agent=agent_name,
            setup=setup,
            steps=self.records,
            miou_initial=self.miou_initial,
            miou_checkpoints=list(self.miou_checkpoints),
            miou_final=self._cur_miou,
            annotation_count=self.annotation_count,
            motion_steps=self.motion_steps,
            terminated_by=self.terminated_by or "step_cap",
            max_steps=self.cfg.max_steps,
            total_navigable_m2=total_navigable_area(self.scene),
            final_explored_m2=self._prev_area,
            map_ascii=self.occ.to_ascii(),
        )


def run_episode(scene: Scene, agent, model: SegModel, trainset: TrainSet,
                cfg: EpisodeConfig, setup: str = "episodic",
                start_pose: Pose = None, episode_seed: int = 0):
    """Run one full episode with an AgentPolicy. Returns
    (EpisodeLog, model_out, trainset_out)."""
    engine = EpisodeEngine(scene, model, trainset, cfg, start_pose=start_pose)
    agent.reset(seed=episode_seed)
    state = engine.begin()
    while not engine.done:
        action = agent.act(state, engine.model)
        out = engine.apply(action)
        state = out.state
    return engine.build_log(agent.name, setup), engine.model, engine.trainset


def run_sequence(scenes: list, agent, cfg: EpisodeConfig, setup: str,
                 model_seed: int = 0, warm_model: SegModel = None) -> list:
    """Run one episode per scene. Episodic resets the model (and its
    annotation buffer) before every scene; lifelong threads both through.
    """
    if setup not in ("episodic", "lifelong"):
        raise ValueError(f"unknown setup {setup!r}")
    n_classes = scenes[0].params.n_classes
    feature_dim = scenes[0].params.feature_dim

    def fresh_model():
        if warm_model is not None:
            return warm_model.copy()
        return init_model(model_seed, n_classes, feature_dim)

    logs = []
    model = fresh_model()
    trainset = TrainSet()
    for i, scene in enumerate(scenes):
        if setup == "episodic":
            model = fresh_model()
            trainset = TrainSet()
        log, model, trainset = run_episode(
            scene, agent, model, trainset, cfg, setup=setup, episode_seed=i,
        )
        logs.append(log)
    return logs
