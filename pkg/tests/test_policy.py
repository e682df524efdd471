import numpy as np
import pytest
import torch

from wanderseg.agents import AgentState
from wanderseg.perception import SegMask
from wanderseg.planner import PolarGoal
from wanderseg.rl.policy import (
    MASKED_LOGIT,
    PolicyNet,
    StateEncoder,
    policy_step,
    sample_action,
)
from wanderseg.world import Action, Pose, render_view

from conftest import box_scene


@pytest.fixture(scope="module")
def setup():
    scene = box_scene(rows=10, cols=10)
    p = scene.params
    enc = StateEncoder(p.n_rays, p.feature_dim, p.n_classes, p.max_range)
    torch.manual_seed(0)
    net = PolicyNet(enc.vis_dim)
    obs = render_view(scene, Pose(4, 4, 1))
    state = AgentState(
        obs=obs,
        seg=SegMask(ids=obs.gt_mask, probs=None),
        propagated=np.full(p.n_rays, p.n_classes, dtype=np.int16),
        polar=PolarGoal(1.5, 0.4),
        step_index=1,
        annotation_count=0,
    )
    return scene, enc, net, state


class TestEncoder:
    def test_shapes(self, setup):
        _, enc, _, state = setup
        vis, nav = enc.encode(state)
        assert vis.shape == (enc.vis_dim,)
        assert nav.shape == (2,)

    def test_layout(self, setup):
        scene, enc, _, state = setup
        p = scene.params
        vis = enc.encode(state)[0].reshape(p.n_rays, enc.per_ray)
        np.testing.assert_allclose(vis[:, :p.feature_dim], state.obs.image,
                                   rtol=1e-6)
        seg_block = vis[:, p.feature_dim:p.feature_dim + p.n_classes]
        assert np.array_equal(np.argmax(seg_block, axis=1), state.seg.ids)
        assert np.all(seg_block.sum(axis=1) == 1.0)
        prop_block = vis[:, p.feature_dim + p.n_classes:-1]
        assert np.all(prop_block[:, -1] == 1.0)  # all rays carry no-label
        np.testing.assert_allclose(vis[:, -1], state.obs.depth / p.max_range,
                                   rtol=1e-6)

    def test_nav_normalization(self, setup):
        _, enc, _, state = setup
        nav = enc.encode(state)[1]
        assert nav[0] == pytest.approx(1.5 / 10.0)
        assert nav[1] == pytest.approx(0.4 / np.pi)


class TestPolicyStep:
    def test_zero_heads_give_uniform_distribution(self, setup):
        _, enc, net, state = setup
        torch.manual_seed(1)
        fresh = PolicyNet(enc.vis_dim)
        torch.nn.init.zeros_(fresh.action_head.weight)
        torch.nn.init.zeros_(fresh.action_head.bias)
        torch.nn.init.zeros_(fresh.value_head.weight)
        torch.nn.init.zeros_(fresh.value_head.bias)
        vis, nav = enc.encode(state)
        logits, value, _ = policy_step(fresh, vis, nav, fresh.initial_hidden())
        probs = torch.softmax(logits, dim=-1)
        np.testing.assert_allclose(probs.detach().numpy(), 0.25, atol=1e-7)
        assert value.item() == 0.0

    def test_deterministic(self, setup):
        _, enc, net, state = setup
        vis, nav = enc.encode(state)
        h = net.initial_hidden()
        a = policy_step(net, vis, nav, h)
        b = policy_step(net, vis, nav, h)
        assert torch.equal(a[0], b[0]) and torch.equal(a[1], b[1])
        assert torch.equal(a[2], b[2])

    def test_hidden_state_feeds_back(self, setup):
        _, enc, net, state = setup
        vis, nav = enc.encode(state)
        _, _, h1 = policy_step(net, vis, nav, net.initial_hidden())
        out_fresh = policy_step(net, vis, nav, net.initial_hidden())[0]
        out_warm = policy_step(net, vis, nav, h1)[0]
        assert not torch.equal(out_fresh, out_warm)

    def test_annotate_mask(self, setup):
        _, enc, net, state = setup
        vis, nav = enc.encode(state)
        logits, _, _ = policy_step(net, vis, nav, net.initial_hidden(),
                                   mask_annotate=True)
        assert logits[int(Action.ANNOTATE)].item() == MASKED_LOGIT
        gen = torch.Generator().manual_seed(0)
        h = net.initial_hidden()
        for _ in range(200):
            action, _, _, h = sample_action(net, vis, nav, h,
                                            mask_annotate=True, generator=gen)
            assert action != Action.ANNOTATE

    def test_nonfinite_activations_raise(self, setup):
        _, enc, net, state = setup
        torch.manual_seed(2)
        bad = PolicyNet(enc.vis_dim)
        with torch.no_grad():
            bad.value_head.weight.fill_(float("inf"))
        vis, nav = enc.encode(state)
        with pytest.raises(FloatingPointError):
            policy_step(bad, vis, nav, bad.initial_hidden())


class TestLogProbGradients:
    def test_matches_finite_differences(self, setup):
        _, enc, _, state = setup
        torch.manual_seed(3)
        net = PolicyNet(enc.vis_dim).double()
        vis, nav = enc.encode(state)
        rng = np.random.default_rng(0)

        def logp_of(action):
            logits, _, _ = policy_step(net, vis, nav, net.initial_hidden())
            return torch.log_softmax(logits, dim=-1)[action]

        for action in range(4):
            net.zero_grad()
            logp_of(action).backward()
            checked = 0
            for name, p in net.named_parameters():
                if p.grad is None:   # the value head plays no part in log-probs
                    assert name.startswith("value_head")
                    continue
                flat = p.detach().view(-1)
                grad = p.grad.view(-1)
                for _ in range(3):
                    i = int(rng.integers(len(flat)))
                    eps = 1e-6
                    with torch.no_grad():
                        orig = flat[i].item()
                        flat[i] = orig + eps
                        up = logp_of(action).item()
                        flat[i] = orig - eps
                        down = logp_of(action).item()
                        flat[i] = orig
                    fd = (up - down) / (2 * eps)
                    assert grad[i].item() == pytest.approx(fd, rel=1e-3, abs=1e-9), \
                        f"grad mismatch at {name}[{i}] for action {action}"
                    checked += 1
            assert checked > 0
