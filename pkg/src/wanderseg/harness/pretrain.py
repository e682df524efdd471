"""Offline pre-training baseline: train one model on randomly annotated
views pooled from training scenes, then score it on the test scenes'
reference views. Used to compare bulk cross-scene annotation against a
few in-scene annotations."""

import numpy as np

from ..perception import (
    RefineParams,
    batch_loss_and_grads,
    init_model,
    miou,
    predict_features,
    top_common_classes,
)
from ..world import Pose, render_view, sample_reference_views


def collect_random_views(scenes, n_views, seed=0):
    """n_views annotated views drawn uniformly over scenes, free cells and
    headings."""
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n_views):
        scene = scenes[int(rng.integers(len(scenes)))]
        cells = scene.free_cells()
        r, c = cells[int(rng.integers(len(cells)))]
        obs = render_view(scene, Pose(r, c, int(rng.integers(scene.params.n_headings))))
        pairs.append((obs, obs.gt_mask.copy()))
    return pairs


def train_offline(model, pairs, params: RefineParams = None, max_iters=4000,
                  patience=50, seed=0):
    """The refinement SGD protocol run offline to convergence: uniform
    minibatches with flip augmentation, stopping once the batch accuracy
    stays above the stop threshold for `patience` consecutive batches."""
    if params is None:
        params = RefineParams()
    if not pairs:
        return model
    rng = np.random.default_rng(seed)
    streak = 0
    for _ in range(max_iters):
        idx = rng.integers(len(pairs), size=min(params.batch_size, len(pairs)))
        feats, labels = [], []
        for i in idx:
            obs, gt = pairs[int(i)]
            if rng.random() < params.flip_prob:
                feats.append(obs.image[::-1])
                labels.append(gt[::-1])
            else:
                feats.append(obs.image)
                labels.append(gt)
        features = np.concatenate(feats, axis=0)
        targets = np.concatenate(labels, axis=0).astype(np.int64)
        probs = predict_features(model, features)
        acc = float(np.mean(np.argmax(probs, axis=1) == targets))
        if acc >= params.stop_acc:
            streak += 1
            if streak >= patience:
                break
            continue
        streak = 0
        _, grad_w, grad_b = batch_loss_and_grads(model, features, targets,
                                                 params.weight_decay)
        model.vel_w = params.momentum * model.vel_w + grad_w
        model.vel_b = params.momentum * model.vel_b + grad_b
        model.weights = model.weights - params.lr * model.vel_w
        model.bias = model.bias - params.lr * model.vel_b
    model.version += 1
    return model


def pretrain_baseline(scenes_train, n_views, scenes_test, n_ref_views=32,
                      ref_seed=20, seed=0, refine_params=None) -> float:
    """Mean test-scene mIoU of a model pre-trained offline on n_views
    random annotations from the training scenes."""
    params = scenes_test[0].params
    model = init_model(seed, params.n_classes, params.feature_dim)
    if n_views > 0:
        pairs = collect_random_views(scenes_train, n_views, seed=seed)
        model = train_offline(model, pairs, refine_params, seed=seed)
    scores = []
    for scene in scenes_test:
        views = sample_reference_views(scene, n_ref_views, ref_seed)
        subset = top_common_classes(views, params.top_k)
        scores.append(miou(model, views, subset))
    return float(np.mean(scores))
