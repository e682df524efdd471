"""Point-goal navigation pretraining.

Short episodes on the true scene geometry: the agent gets a goal in polar
coordinates and the goal-seeking reward only. Ground-truth segmentation
fills the predicted/propagated slots of the state and the Annotate action
is masked out, so the policy only learns to navigate.
"""

from dataclasses import dataclass

import numpy as np
import torch

from .. import kernels
from ..agents import AgentState
from ..perception import SegMask
from ..planner import PolarGoal, polar_goal
from ..world import FREE, Action, Pose, render_view, step as world_step
from .policy import StateEncoder, sample_action
from .ppo import PPOParams, RolloutBuffer, make_optimizer, ppo_update
from .rewards import RewardConfig


@dataclass
class PointGoalConfig:
    max_ep_steps: int = 60
    min_goal_hops: int = 2
    max_goal_hops: int = 10
    seg_len: int = 64
    rollouts_per_update: int = 4
    lr: float = 1e-3           # desk-scale budget; full-env training uses PPOParams.lr
    entropy_coef: float = 0.005


class PointGoalEnv:
    """One episode = reach a sampled goal cell within the step cap."""

    def __init__(self, scenes, cfg: PointGoalConfig, reward_cfg: RewardConfig, seed=0):
        self.scenes = scenes
        self.cfg = cfg
        self.reward_cfg = reward_cfg
        self.rng = np.random.default_rng(seed)
        self.params = scenes[0].params
        self.encoder = StateEncoder(
            self.params.n_rays, self.params.feature_dim,
            self.params.n_classes, self.params.max_range,
        )
        self.scene = None
        self.pose = None
        self.goal = None
        self.dist = None  # hop field from the goal over true free cells
        self.t = 0
        self.reached = False

    def reset(self):
        cfg = self.cfg
        while True:
            self.scene = self.scenes[int(self.rng.integers(len(self.scenes)))]
            cells = self.scene.free_cells()
            r, c = cells[int(self.rng.integers(len(cells)))]
            self.pose = Pose(r, c, int(self.rng.integers(self.params.n_headings)))
            free = np.ascontiguousarray(self.scene.grid == FREE, dtype=np.uint8)
            start_field = kernels.bfs_grid(free, r, c)
            hops = start_field.copy()
            ok = (hops >= cfg.min_goal_hops) & (hops <= cfg.max_goal_hops)
            candidates = np.argwhere(ok)
            if len(candidates) == 0:
                continue
            gr, gc = candidates[int(self.rng.integers(len(candidates)))]
            self.goal = (int(gr), int(gc))
            self.dist = kernels.bfs_grid(free, self.goal[0], self.goal[1])
            self.t = 0
            self.reached = False
            return self._encode()

    def _goal_distance(self, cell):
        return float(self.dist[cell]) * self.params.cell_size

    def _encode(self):
        obs = render_view(self.scene, self.pose)
        gt = obs.gt_mask
        state = AgentState(
            obs=obs,
            seg=SegMask(ids=gt, probs=None),   # ground truth stands in for S_t
            propagated=gt,                      # and for P_t
            polar=polar_goal(self.pose, self.goal, self.params.cell_size,
                             self.params.n_headings),
            step_index=self.t + 1,
            annotation_count=0,
        )
        return self.encoder.encode(state)

    def step(self, action: Action):
        if action == Action.ANNOTATE:
            raise ValueError("Annotate is masked during point-goal training")
        d_prev = self._goal_distance((self.pose.row, self.pose.col))
        self.pose = world_step(self.scene, self.pose, action)
        d_new = self._goal_distance((self.pose.row, self.pose.col))
        reward = d_prev - d_new
        self.t += 1
        done = False
        if d_new < self.reward_cfg.eps_goal:
            reward += self.reward_cfg.lambda_goal
            self.reached = True
            done = True
        elif self.t >= self.cfg.max_ep_steps:
            done = True
        return reward, done


def pretrain_pointgoal(net, scenes, total_steps, ppo_params: PPOParams = None,
                       cfg: PointGoalConfig = None, reward_cfg: RewardConfig = None,
                       seed=0, log_cb=None):
    """PPO over point-goal episodes for a fixed environment-step budget.
    Returns (net, history); history rows are dicts per update."""
    from dataclasses import replace

    ppo_params = ppo_params or PPOParams()
    cfg = cfg or PointGoalConfig()
    ppo_params = replace(ppo_params, lr=cfg.lr, entropy_coef=cfg.entropy_coef)
    reward_cfg = reward_cfg or RewardConfig()
    env = PointGoalEnv(scenes, cfg, reward_cfg, seed=seed)
    optimizer = make_optimizer(net, ppo_params)
    gen = torch.Generator().manual_seed(seed)
    update_rng = np.random.default_rng(seed + 1)

    buffer = RolloutBuffer(cfg.seg_len, env.encoder.vis_dim, net.core_hidden)
    rollouts = []
    history = []
    hidden = net.initial_hidden()
    buffer.start_segment(hidden)
    vis, nav = env.reset()
    ep_return = 0.0
    returns, successes = [], []
    global_step = 0

    while global_step < total_steps:
        action, logp, value, hidden = sample_action(
            net, vis, nav, hidden, mask_annotate=True, generator=gen)
        reward, done = env.step(action)
        ep_return += reward
        buffer.add(vis, nav, action, logp, value, reward, done)
        global_step += 1
        if done:
            returns.append(ep_return)
            successes.append(1.0 if env.reached else 0.0)
            ep_return = 0.0
            hidden = net.initial_hidden()
            vis, nav = env.reset()
        else:
            vis, nav = env._encode()
        if buffer.full:
            if done:
                bootstrap = 0.0
            else:
                with torch.no_grad():
                    _, _, v, _ = _peek_value(net, vis, nav, hidden)
                bootstrap = v
            rollouts.append(buffer.finalize(bootstrap))
            buffer.start_segment(hidden)
            if len(rollouts) >= cfg.rollouts_per_update:
                stats = ppo_update(net, optimizer, rollouts, ppo_params,
                                   mask_annotate=True, rng=update_rng)
                rollouts = []
                row = {
                    "step": global_step,
                    "mean_return": float(np.mean(returns)) if returns else 0.0,
                    "success_rate": float(np.mean(successes)) if successes else 0.0,
                    **{k: stats[k] for k in ("policy_loss", "value_loss", "entropy")},
                }
                history.append(row)
                if log_cb:
                    log_cb(row)
                returns, successes = [], []
    return net, history


def _peek_value(net, vis, nav, hidden):
    from .policy import policy_step
    logits, value, h = policy_step(net, vis, nav, hidden, mask_annotate=True)
    return logits, None, float(value.item()), h


@torch.no_grad()
def eval_pointgoal(net, scenes, episodes=50, seed=0, cfg: PointGoalConfig = None,
                   reward_cfg: RewardConfig = None) -> float:
    """Fraction of episodes where the sampled policy reaches the goal."""
    cfg = cfg or PointGoalConfig()
    reward_cfg = reward_cfg or RewardConfig()
    env = PointGoalEnv(scenes, cfg, reward_cfg, seed=seed)
    gen = torch.Generator().manual_seed(seed + 7)
    succ = 0
    for _ in range(episodes):
        vis, nav = env.reset()
        hidden = net.initial_hidden()
        done = False
        while not done:
            action, _, _, hidden = sample_action(
                net, vis, nav, hidden, mask_annotate=True, generator=gen)
            _, done = env.step(action)
            if not done:
                vis, nav = env._encode()
        succ += 1 if env.reached else 0
    return succ / episodes
