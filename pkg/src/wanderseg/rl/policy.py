"""Recurrent actor-critic policy.

Two input branches (a feedforward encoder over the per-ray stack and a
small encoder over the polar goal) feed a GRU core; the hidden state
drives a 4-way action head and a scalar value head. Ray stacks carry the
raw features, the predicted class one-hot, the propagated-annotation
one-hot (with its extra no-label channel) and normalized depth.
"""

import numpy as np
import torch
import torch.nn as nn

from ..world import Action

N_ACTIONS = 4
MASKED_LOGIT = -1e9


class StateEncoder:
    """Flattens an AgentState into the policy's two input vectors."""

    def __init__(self, n_rays, feature_dim, n_classes, max_range):
        self.n_rays = n_rays
        self.feature_dim = feature_dim
        self.n_classes = n_classes
        self.max_range = max_range
        self.per_ray = feature_dim + n_classes + (n_classes + 1) + 1
        self.vis_dim = n_rays * self.per_ray

    def encode(self, state):
        c = self.n_classes
        stack = np.zeros((self.n_rays, self.per_ray), dtype=np.float32)
        stack[:, :self.feature_dim] = state.obs.image
        seg_ids = np.asarray(state.seg.ids, dtype=np.int64)
        stack[np.arange(self.n_rays), self.feature_dim + seg_ids] = 1.0
        prop_ids = np.asarray(state.propagated, dtype=np.int64)
        stack[np.arange(self.n_rays), self.feature_dim + c + prop_ids] = 1.0
        stack[:, -1] = state.obs.depth / self.max_range
        nav = np.array(
            [state.polar.r / self.max_range, state.polar.phi / np.pi],
            dtype=np.float32,
        )
        return stack.reshape(-1), nav


class PolicyNet(nn.Module):
    """Visual branch: a small shared conv over the per-ray stack (kernel 3,
    so prediction speckle and prediction-vs-propagation disagreement across
    neighboring rays are visible), summarized by a global mean pool plus
    coarse sector pools (the sectors keep enough direction for obstacle
    avoidance). A small encoder embeds the polar goal; a GRU core drives
    the action and value heads."""

    def __init__(self, vis_dim, n_rays=None, ray_feat=24, n_sectors=8,
                 vis_out=64, nav_out=16, core_hidden=64):
        super().__init__()
        self.arch = dict(vis_dim=vis_dim, n_rays=n_rays, ray_feat=ray_feat,
                         n_sectors=n_sectors, vis_out=vis_out, nav_out=nav_out,
                         core_hidden=core_hidden)
        self.vis_dim = vis_dim
        self.n_rays = n_rays if n_rays is not None else 64
        if vis_dim % self.n_rays != 0:
            raise ValueError("vis_dim must be n_rays * per_ray")
        self.per_ray = vis_dim // self.n_rays
        if self.n_rays % n_sectors != 0:
            raise ValueError("n_rays must be divisible by n_sectors")
        self.n_sectors = n_sectors
        self.core_hidden = core_hidden
        self.ray_encoder = nn.Conv1d(self.per_ray, ray_feat, kernel_size=3,
                                     padding=1)
        self.visual_out = nn.Sequential(
            nn.Linear(ray_feat * (1 + n_sectors), vis_out), nn.ReLU(),
        )
        self.nav = nn.Sequential(
            nn.Linear(2, nav_out), nn.ReLU(),
            nn.Linear(nav_out, nav_out), nn.ReLU(),
        )
        self.core = nn.GRU(vis_out + nav_out, core_hidden)
        self.action_head = nn.Linear(core_hidden, N_ACTIONS)
        self.value_head = nn.Linear(core_hidden, 1)

    def initial_hidden(self, batch=1, dtype=None):
        p = next(self.parameters())
        return torch.zeros(1, batch, self.core_hidden,
                           dtype=dtype or p.dtype, device=p.device)

    def _encode_visual(self, vis):
        t, b = vis.shape[0], vis.shape[1]
        rays = vis.view(t, b, self.n_rays, self.per_ray)
        feat = self.ray_encoder(rays)                      # (T, B, R, F)
        pooled = feat.mean(dim=2)                          # (T, B, F)
        sectors = feat.view(t, b, self.n_sectors,
                            self.n_rays // self.n_sectors, -1).mean(dim=3)
        code = torch.cat([pooled, sectors.flatten(2)], dim=-1)
        return self.visual_out(code)

    def forward(self, vis, nav, hidden, mask_annotate=False):
        """vis: (T, B, vis_dim), nav: (T, B, 2), hidden: (1, B, H).
        Returns (logits (T, B, 4), values (T, B), hidden')."""
        code = torch.cat([self._encode_visual(vis), self.nav(nav)], dim=-1)
        out, hidden = self.core(code, hidden)
        logits = self.action_head(out)
        if mask_annotate:
            logits = logits.clone()
            logits[..., int(Action.ANNOTATE)] = MASKED_LOGIT
        values = self.value_head(out).squeeze(-1)
        return logits, values, hidden


def policy_step(net, vis_vec, nav_vec, hidden, mask_annotate=False):
    """Single-step forward; accepts 1-D numpy inputs, returns a logits row,
    a value scalar and the next hidden state."""
    p = next(net.parameters())
    vis = torch.as_tensor(vis_vec, dtype=p.dtype).view(1, 1, -1)
    nav = torch.as_tensor(nav_vec, dtype=p.dtype).view(1, 1, -1)
    logits, values, hidden = net(vis, nav, hidden, mask_annotate)
    if not torch.isfinite(values).all() or not torch.isfinite(
            logits[..., :3] if mask_annotate else logits).all():
        raise FloatingPointError("non-finite policy activations")
    return logits[0, 0], values[0, 0], hidden


@torch.no_grad()
def sample_action(net, vis_vec, nav_vec, hidden, mask_annotate=False,
                  generator=None):
    """Sample an action; returns (action, log_prob, value, hidden')."""
    logits, value, hidden = policy_step(net, vis_vec, nav_vec, hidden, mask_annotate)
    probs = torch.softmax(logits, dim=-1)
    idx = torch.multinomial(probs, 1, generator=generator).item()
    logp = torch.log_softmax(logits, dim=-1)[idx].item()
    return Action(idx), float(logp), float(value.item()), hidden
