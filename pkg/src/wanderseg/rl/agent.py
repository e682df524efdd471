"""Evaluation wrapper exposing a trained policy through the AgentPolicy
interface used by the episode runner."""

import torch

from ..agents import AgentPolicy
from .policy import PolicyNet, StateEncoder, sample_action


class RLAgent(AgentPolicy):
    name = "rl"

    def __init__(self, net: PolicyNet, world_params, seed: int = 0):
        super().__init__(world_params.turn_angle_deg)
        self.net = net
        self.encoder = StateEncoder(
            world_params.n_rays, world_params.feature_dim,
            world_params.n_classes, world_params.max_range,
        )
        self._seed = seed
        self._gen = torch.Generator().manual_seed(seed)
        self._hidden = net.initial_hidden()

    def reset(self, seed: int = 0):
        self._gen = torch.Generator().manual_seed(self._seed * 100003 + seed)
        self._hidden = self.net.initial_hidden()

    def act(self, state, model):
        vis, nav = self.encoder.encode(state)
        action, _, _, self._hidden = sample_action(
            self.net, vis, nav, self._hidden, generator=self._gen)
        return action
