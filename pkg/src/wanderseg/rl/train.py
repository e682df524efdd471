"""Training in the full annotation environment.

Scenes are visited in order for a few episodes each; the segmentation
model is reset periodically so the policy sees both fresh and
already-trained perception, which is what lets it adapt its annotation
rate. Ablation flags cover episodic training, removing the accuracy
bonus, and replacing goal-seeking rewards with raw map-coverage reward.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from ..harness.episode import EpisodeConfig, EpisodeEngine
from ..perception import TrainSet, init_model, top_common_classes
from ..world import sample_reference_views
from .policy import PolicyNet, StateEncoder, sample_action
from .ppo import PPOParams, RolloutBuffer, make_optimizer, ppo_update


@dataclass
class Ablations:
    episodic_training: bool = False
    no_acc_reward: bool = False
    no_nav_pretrain: bool = False      # consumed by the training pipeline
    no_global_exploration: bool = False

    @classmethod
    def from_flags(cls, flags):
        ab = cls()
        for f in flags or []:
            key = f.replace("-", "_")
            if not hasattr(ab, key):
                raise ValueError(f"unknown ablation {f!r}")
            setattr(ab, key, True)
        return ab


@dataclass
class TrainConfig:
    episode_len: int = 500
    episodes_per_scene: int = 4
    reset_period: int = 10     # reset the segmentation model every Nth episode
    seg_len: int = 128
    rollouts_per_update: int = 8
    model_seed: int = 0
    coverage_coef: float = 1.0


def make_policy(world_params, seed=0) -> PolicyNet:
    torch.manual_seed(seed)
    enc = StateEncoder(world_params.n_rays, world_params.feature_dim,
                       world_params.n_classes, world_params.max_range)
    return PolicyNet(enc.vis_dim, n_rays=world_params.n_rays)


def build_training_episode_config(base_cfg: EpisodeConfig, ablations: Ablations,
                                  tcfg: TrainConfig) -> EpisodeConfig:
    """Episode settings used during policy training: short episodes, no
    path-following collision replans, and the ablation switches applied."""
    reward_cfg = base_cfg.reward_cfg
    if ablations.no_acc_reward:
        reward_cfg = replace(reward_cfg, lambda_acc=0.0)
    return replace(
        base_cfg,
        max_steps=tcfg.episode_len,
        reward_cfg=reward_cfg,
        replan_on_collision=False,
        coverage_reward=ablations.no_global_exploration,
        coverage_coef=tcfg.coverage_coef,
    )


def should_reset_model(episode_index: int, ablations: Ablations,
                       reset_period: int) -> bool:
    """Fresh segmentation model at episode 1 and then every reset_period
    episodes (11, 21, ... for period 10); every episode under the
    episodic-training ablation."""
    if episode_index == 1 or ablations.episodic_training:
        return True
    return (episode_index - 1) % reset_period == 0


class _SceneCache:
    """Reference views and the frozen class subset, computed once per scene."""

    def __init__(self, cfg: EpisodeConfig):
        self.cfg = cfg
        self._cache = {}

    def get(self, scene):
        if scene.id not in self._cache:
            views = sample_reference_views(scene, self.cfg.n_ref_views, self.cfg.ref_seed)
            subset = top_common_classes(views, scene.params.top_k)
            self._cache[scene.id] = (views, subset)
        return self._cache[scene.id]


def train_lifelong(net, scenes, total_steps, ablations: Ablations = None,
                   ppo_params: PPOParams = None, tcfg: TrainConfig = None,
                   base_cfg: EpisodeConfig = None, seed=0, log_cb=None):
    """PPO in the annotation environment for a fixed step budget.
    Returns (net, history); history rows carry (step, mean_return,
    mean_episode_annotations)."""
    ablations = ablations or Ablations()
    ppo_params = ppo_params or PPOParams()
    tcfg = tcfg or TrainConfig()
    base_cfg = base_cfg or EpisodeConfig()
    if total_steps <= 0:
        return net, []

    cfg = build_training_episode_config(base_cfg, ablations, tcfg)
    cache = _SceneCache(cfg)
    params = scenes[0].params
    encoder = StateEncoder(params.n_rays, params.feature_dim,
                           params.n_classes, params.max_range)
    optimizer = make_optimizer(net, ppo_params)
    gen = torch.Generator().manual_seed(seed)
    update_rng = np.random.default_rng(seed + 1)

    model = None
    trainset = None
    resets = 0
    episode_index = 0
    engine = None
    state = None
    hidden = net.initial_hidden()
    buffer = RolloutBuffer(tcfg.seg_len, encoder.vis_dim, net.core_hidden)
    buffer.start_segment(hidden)
    rollouts, history = [], []
    ep_return = 0.0
    ep_returns, ep_annots = [], []
    global_step = 0

    def next_episode():
        nonlocal model, trainset, resets, episode_index, engine, state, hidden
        episode_index += 1
        if should_reset_model(episode_index, ablations, tcfg.reset_period):
            model = init_model(tcfg.model_seed + resets, params.n_classes,
                               params.feature_dim)
            trainset = TrainSet()
            resets += 1
        scene = scenes[((episode_index - 1) // tcfg.episodes_per_scene) % len(scenes)]
        views, subset = cache.get(scene)
        engine = EpisodeEngine(scene, model, trainset, cfg,
                               ref_views=views, class_subset=subset)
        hidden = net.initial_hidden()
        state = engine.begin()
        while state is None:   # degenerate scene, fully seen at spawn
            episode_index += 1
            scene = scenes[((episode_index - 1) // tcfg.episodes_per_scene) % len(scenes)]
            views, subset = cache.get(scene)
            engine = EpisodeEngine(scene, model, trainset, cfg,
                                   ref_views=views, class_subset=subset)
            state = engine.begin()

    next_episode()
    while global_step < total_steps:
        vis, nav = encoder.encode(state)
        action, logp, value, hidden = sample_action(net, vis, nav, hidden,
                                                    generator=gen)
        out = engine.apply(action)
        ep_return += out.r_total
        buffer.add(vis, nav, action, logp, value, out.r_total, out.done)
        global_step += 1
        if out.done:
            ep_returns.append(ep_return)
            ep_annots.append(engine.annotation_count)
            ep_return = 0.0
            model = engine.model
            trainset = engine.trainset
            next_episode()
        else:
            state = out.state
        if buffer.full:
            if out.done:
                bootstrap = 0.0
            else:
                nvis, nnav = encoder.encode(state)
                from .policy import policy_step
                with torch.no_grad():
                    _, v, _ = policy_step(net, nvis, nnav, hidden)
                bootstrap = float(v.item())
            rollouts.append(buffer.finalize(bootstrap))
            buffer.start_segment(hidden)
            if len(rollouts) >= tcfg.rollouts_per_update:
                stats = ppo_update(net, optimizer, rollouts, ppo_params,
                                   rng=update_rng)
                rollouts = []
                row = {
                    "step": global_step,
                    "mean_return": float(np.mean(ep_returns)) if ep_returns else 0.0,
                    "mean_episode_annotations":
                        float(np.mean(ep_annots)) if ep_annots else 0.0,
                    **{k: stats[k] for k in ("policy_loss", "value_loss", "entropy")},
                }
                history.append(row)
                if log_cb:
                    log_cb(row)
                ep_returns, ep_annots = [], []
    return net, history


CKPT_FORMAT_VERSION = 1


def config_hash(*objs) -> str:
    blob = json.dumps([getattr(o, "__dict__", o) for o in objs],
                      sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def save_policy(net: PolicyNet, path, world_params, extra=None):
    payload = {
        "format_version": CKPT_FORMAT_VERSION,
        "state_dict": net.state_dict(),
        "arch": net.arch,
        "config_hash": config_hash(world_params, extra or {}),
        "extra": extra or {},
    }
    torch.save(payload, path)


def load_policy(path) -> PolicyNet:
    payload = torch.load(path, weights_only=False)
    if payload.get("format_version") != CKPT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format: {payload.get('format_version')}")
    net = PolicyNet(**payload["arch"])
    net.load_state_dict(payload["state_dict"])
    return net
