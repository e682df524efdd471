"""Clipped-surrogate policy optimization over recurrent rollouts.

Rollouts are fixed-length segments that may span episode boundaries; the
GRU is re-unrolled chunk-by-chunk between done flags with the stored
initial hidden state, so gradients flow through the recurrence.
"""

from dataclasses import dataclass, field

import numpy as np
import torch

from .policy import PolicyNet


@dataclass
class PPOParams:
    lr: float = 3e-4
    clip: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    epochs: int = 4
    minibatch_rollouts: int = 2
    max_grad_norm: float = 0.5
    normalize_adv: bool = True


@dataclass
class Rollout:
    vis: np.ndarray       # (T, vis_dim) float32
    nav: np.ndarray       # (T, 2) float32
    actions: np.ndarray   # (T,) int64
    logp: np.ndarray      # (T,) float32
    values: np.ndarray    # (T,) float32
    rewards: np.ndarray   # (T,) float32
    dones: np.ndarray     # (T,) bool; True when the episode ended at t
    h0: np.ndarray        # (core_hidden,) hidden state before step 0
    bootstrap_value: float = 0.0

    def __len__(self):
        return len(self.actions)


class RolloutBuffer:
    """Accumulates transitions until a segment is full."""

    def __init__(self, seg_len, vis_dim, core_hidden):
        self.seg_len = seg_len
        self.vis = np.zeros((seg_len, vis_dim), dtype=np.float32)
        self.nav = np.zeros((seg_len, 2), dtype=np.float32)
        self.actions = np.zeros(seg_len, dtype=np.int64)
        self.logp = np.zeros(seg_len, dtype=np.float32)
        self.values = np.zeros(seg_len, dtype=np.float32)
        self.rewards = np.zeros(seg_len, dtype=np.float32)
        self.dones = np.zeros(seg_len, dtype=bool)
        self.h0 = np.zeros(core_hidden, dtype=np.float32)
        self.t = 0

    def start_segment(self, hidden):
        self.h0 = hidden.detach().numpy().reshape(-1).astype(np.float32).copy()
        self.t = 0

    def add(self, vis, nav, action, logp, value, reward, done):
        i = self.t
        self.vis[i] = vis
        self.nav[i] = nav
        self.actions[i] = int(action)
        self.logp[i] = logp
        self.values[i] = value
        self.rewards[i] = reward
        self.dones[i] = done
        self.t += 1

    @property
    def full(self):
        return self.t >= self.seg_len

    def finalize(self, bootstrap_value) -> Rollout:
        t = self.t
        return Rollout(
            vis=self.vis[:t].copy(), nav=self.nav[:t].copy(),
            actions=self.actions[:t].copy(), logp=self.logp[:t].copy(),
            values=self.values[:t].copy(), rewards=self.rewards[:t].copy(),
            dones=self.dones[:t].copy(), h0=self.h0.copy(),
            bootstrap_value=float(bootstrap_value),
        )


def compute_gae(rollout: Rollout, gamma: float, lam: float):
    """Generalized advantage estimates and value targets."""
    t_len = len(rollout)
    adv = np.zeros(t_len, dtype=np.float64)
    last = 0.0
    next_value = rollout.bootstrap_value
    for t in range(t_len - 1, -1, -1):
        not_done = 0.0 if rollout.dones[t] else 1.0
        delta = rollout.rewards[t] + gamma * next_value * not_done - rollout.values[t]
        last = delta + gamma * lam * not_done * last
        adv[t] = last
        next_value = rollout.values[t]
    returns = adv + rollout.values
    return adv, returns


def clipped_surrogate(logp_new, logp_old, adv, clip):
    """Per-sample clipped surrogate objective (to be maximized)."""
    ratio = torch.exp(logp_new - logp_old)
    return torch.minimum(ratio * adv, torch.clamp(ratio, 1.0 - clip, 1.0 + clip) * adv)


def evaluate_rollout(net: PolicyNet, rollout: Rollout, mask_annotate: bool):
    """Re-run the policy over a stored segment, resetting the hidden state
    after done flags. Returns (logp, entropy, values) tensors of length T."""
    p = next(net.parameters())
    vis = torch.as_tensor(rollout.vis, dtype=p.dtype)
    nav = torch.as_tensor(rollout.nav, dtype=p.dtype)
    actions = torch.as_tensor(rollout.actions)
    t_len = len(rollout)

    starts = [0] + [t + 1 for t in range(t_len - 1) if rollout.dones[t]]
    ends = starts[1:] + [t_len]
    hidden = torch.as_tensor(rollout.h0, dtype=p.dtype).view(1, 1, -1)

    logits_parts, value_parts = [], []
    for s, e in zip(starts, ends):
        if s > 0:
            hidden = net.initial_hidden()
        logits, values, hidden = net(
            vis[s:e].unsqueeze(1), nav[s:e].unsqueeze(1), hidden, mask_annotate
        )
        logits_parts.append(logits[:, 0])
        value_parts.append(values[:, 0])
    logits = torch.cat(logits_parts, dim=0)
    values = torch.cat(value_parts, dim=0)
    logp_all = torch.log_softmax(logits, dim=-1)
    logp = logp_all.gather(1, actions.view(-1, 1)).squeeze(1)
    probs = torch.softmax(logits, dim=-1)
    entropy = -(probs * logp_all).sum(dim=-1)
    return logp, entropy, values


def make_optimizer(net: PolicyNet, params: PPOParams):
    return torch.optim.Adam(net.parameters(), lr=params.lr)


def ppo_update(net: PolicyNet, optimizer, rollouts, params: PPOParams,
               mask_annotate: bool = False, rng: np.random.Generator = None):
    """One PPO update over a batch of rollouts. Returns a stats dict; the
    first processed minibatch is evaluated before any step, so its ratios
    diagnose on-policyness."""
    if not rollouts:
        raise ValueError("ppo_update needs at least one rollout")
    if rng is None:
        rng = np.random.default_rng(0)

    adv_list, ret_list = [], []
    for ro in rollouts:
        adv, ret = compute_gae(ro, params.gamma, params.gae_lambda)
        adv_list.append(adv)
        ret_list.append(ret)
    if params.normalize_adv:
        flat = np.concatenate(adv_list)
        mu, sd = flat.mean(), flat.std()
        adv_list = [(a - mu) / (sd + 1e-8) for a in adv_list]

    p = next(net.parameters())
    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0,
             "n_minibatches": 0, "initial_ratio_dev": None}

    for epoch in range(params.epochs):
        order = rng.permutation(len(rollouts))
        for mb_start in range(0, len(order), params.minibatch_rollouts):
            idxs = order[mb_start:mb_start + params.minibatch_rollouts]
            logp_parts, ent_parts, val_parts, old_parts, adv_parts, ret_parts = \
                [], [], [], [], [], []
            for i in idxs:
                ro = rollouts[i]
                logp, ent, val = evaluate_rollout(net, ro, mask_annotate)
                logp_parts.append(logp)
                ent_parts.append(ent)
                val_parts.append(val)
                old_parts.append(torch.as_tensor(ro.logp, dtype=p.dtype))
                adv_parts.append(torch.as_tensor(adv_list[i], dtype=p.dtype))
                ret_parts.append(torch.as_tensor(ret_list[i], dtype=p.dtype))
            logp_new = torch.cat(logp_parts)
            entropy = torch.cat(ent_parts).mean()
            values = torch.cat(val_parts)
            logp_old = torch.cat(old_parts)
            adv = torch.cat(adv_parts)
            returns = torch.cat(ret_parts)

            if stats["initial_ratio_dev"] is None:
                with torch.no_grad():
                    ratio = torch.exp(logp_new - logp_old)
                    stats["initial_ratio_dev"] = float((ratio - 1.0).abs().max())

            policy_loss = -clipped_surrogate(logp_new, logp_old, adv, params.clip).mean()
            value_loss = ((values - returns) ** 2).mean()
            loss = (policy_loss + params.value_coef * value_loss
                    - params.entropy_coef * entropy)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"non-finite PPO loss: policy={policy_loss.item()!r} "
                    f"value={value_loss.item()!r} entropy={entropy.item()!r}"
                )
            optimizer.zero_grad()
            loss.backward()
            if params.max_grad_norm > 0:
                torch.nn.utils.clip_grad_norm_(net.parameters(), params.max_grad_norm)
            optimizer.step()

            stats["policy_loss"] += float(policy_loss.item())
            stats["value_loss"] += float(value_loss.item())
            stats["entropy"] += float(entropy.item())
            stats["n_minibatches"] += 1

    for k in ("policy_loss", "value_loss", "entropy"):
        stats[k] /= max(stats["n_minibatches"], 1)
    return stats
