"""Per-pixel segmentation model and its online refinement protocol.

The model is a linear-softmax classifier over ray features, refined by
SGD with momentum whenever the agent requests an annotation. Refinement
always trains on a minibatch containing the newest annotated view and
stops once minibatch accuracy reaches the stop threshold (or at the
iteration cap).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .world import Observation


@dataclass
class RefineParams:
    lr: float = 3e-3
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 4
    stop_acc: float = 0.95
    max_iters: int = 1000
    flip_prob: float = 0.5


@dataclass
class SegModel:
    weights: np.ndarray  # (n_classes, feature_dim)
    bias: np.ndarray     # (n_classes,)
    vel_w: np.ndarray
    vel_b: np.ndarray
    version: int = 0
    seed: int = 0
    last_refine_iters: int = 0
    last_refine_stop_acc: float = 0.0

    @property
    def n_classes(self):
        return self.weights.shape[0]

    def copy(self):
        return SegModel(
            weights=self.weights.copy(),
            bias=self.bias.copy(),
            vel_w=self.vel_w.copy(),
            vel_b=self.vel_b.copy(),
            version=self.version,
            seed=self.seed,
            last_refine_iters=self.last_refine_iters,
            last_refine_stop_acc=self.last_refine_stop_acc,
        )


@dataclass
class SegMask:
    ids: np.ndarray    # (n_rays,)
    probs: np.ndarray  # (n_rays, n_classes)


class TrainSet:
    """Annotated views collected by the agent, append-only within an
    episode; carried across scenes in the lifelong setup."""

    def __init__(self):
        self.pairs = []  # list of (Observation, gt_mask)

    def __len__(self):
        return len(self.pairs)

    def append(self, obs: Observation, gt_mask: np.ndarray):
        self.pairs.append((obs, np.asarray(gt_mask)))


def init_model(seed: int, n_classes: int, feature_dim: int,
               init_scale: float = 0.01) -> SegModel:
    rng = np.random.default_rng(seed)
    return SegModel(
        weights=rng.uniform(-init_scale, init_scale, size=(n_classes, feature_dim)),
        bias=rng.uniform(-init_scale, init_scale, size=n_classes),
        vel_w=np.zeros((n_classes, feature_dim)),
        vel_b=np.zeros(n_classes),
        version=0,
        seed=seed,
    )


def softmax_rows(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def predict_features(model: SegModel, features: np.ndarray) -> np.ndarray:
    """Class probabilities for a (n, feature_dim) feature stack."""
    if not np.all(np.isfinite(features)):
        raise ValueError("non-finite features")
    return softmax_rows(features @ model.weights.T + model.bias)


def predict(model: SegModel, obs: Observation) -> SegMask:
    probs = predict_features(model, obs.image)
    return SegMask(ids=np.argmax(probs, axis=1).astype(np.int16), probs=probs)


def accuracy(model: SegModel, obs: Observation) -> float:
    """Fraction of ray-pixels whose argmax matches the ground truth."""
    return float(np.mean(predict(model, obs).ids == obs.gt_mask))


def batch_loss_and_grads(model: SegModel, features, labels, weight_decay):
    """Mean cross-entropy over pixels plus L2 penalty, with analytic
    gradients. Kept separate so tests can check it against finite
    differences."""
    n = features.shape[0]
    probs = predict_features(model, features)
    eps = 1e-12
    ce = -np.mean(np.log(probs[np.arange(n), labels] + eps))
    loss = ce + 0.5 * weight_decay * (
        np.sum(model.weights ** 2) + np.sum(model.bias ** 2)
    )
    delta = probs
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grad_w = delta.T @ features + weight_decay * model.weights
    grad_b = delta.sum(axis=0) + weight_decay * model.bias
    return loss, grad_w, grad_b


def _augmented(obs, gt, flip, flip_prob, rng):
    if flip and rng.random() < flip_prob:
        return obs.image[::-1], gt[::-1]
    return obs.image, gt


def refine(model: SegModel, trainset: TrainSet, new_pair, params: RefineParams = None,
           augment: bool = True) -> SegModel:
    """Append the new annotation and run SGD minibatch steps until the
    minibatch accuracy reaches the stop threshold or the iteration cap.

    Minibatches are the new pair plus batch_size-1 replays sampled with
    replacement (the whole set while it is still small). Accuracy is
    measured on the post-augmentation batch before that iteration's step.
    Returns a new model; the input model is left untouched.
    """
    if params is None:
        params = RefineParams()
    if new_pair is not None:
        obs_new, gt_new = new_pair
        trainset.append(obs_new, gt_new)
    if len(trainset) == 0:
        raise ValueError("refine needs at least one annotated view")

    out = model.copy()
    rng = np.random.default_rng(np.random.SeedSequence([model.seed, model.version]))
    iters = 0
    acc = 0.0
    for _ in range(params.max_iters):
        iters += 1
        if len(trainset) < params.batch_size:
            batch = list(trainset.pairs)
        else:
            batch = [trainset.pairs[-1]]
            for _ in range(params.batch_size - 1):
                batch.append(trainset.pairs[int(rng.integers(len(trainset)))])
        feats = []
        labels = []
        for obs, gt in batch:
            f, g = _augmented(obs, gt, augment, params.flip_prob, rng)
            feats.append(f)
            labels.append(g)
        features = np.concatenate(feats, axis=0)
        targets = np.concatenate(labels, axis=0).astype(np.int64)

        probs = predict_features(out, features)
        acc = float(np.mean(np.argmax(probs, axis=1) == targets))
        if acc >= params.stop_acc:
            break

        _, grad_w, grad_b = batch_loss_and_grads(
            out, features, targets, params.weight_decay
        )
        out.vel_w = params.momentum * out.vel_w + grad_w
        out.vel_b = params.momentum * out.vel_b + grad_b
        out.weights = out.weights - params.lr * out.vel_w
        out.bias = out.bias - params.lr * out.vel_b

    out.version = model.version + 1
    out.last_refine_iters = iters
    out.last_refine_stop_acc = acc
    return out


def top_common_classes(ref_views: list, k: int) -> list:
    """The k class ids with the highest ground-truth pixel counts in the
    reference views (ties to the smaller id); fewer if fewer are present."""
    counts = {}
    for obs in ref_views:
        ids, n = np.unique(obs.gt_mask, return_counts=True)
        for c, cnt in zip(ids.tolist(), n.tolist()):
            counts[c] = counts.get(c, 0) + cnt
    present = sorted(counts, key=lambda c: (-counts[c], c))
    return present[:k]


def miou(model: SegModel, ref_views: list, class_subset: list) -> float:
    """Mean IoU over the class subset, pooled over all reference-view
    pixels; classes absent from both prediction and ground truth are
    excluded from the mean."""
    if not class_subset:
        raise ValueError("class subset must be non-empty")
    n_classes = model.n_classes
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    for obs in ref_views:
        pred = predict(model, obs).ids
        np.add.at(conf, (obs.gt_mask.astype(np.int64), pred.astype(np.int64)), 1)
    ious = []
    for c in class_subset:
        tp = conf[c, c]
        fp = conf[:, c].sum() - tp
        fn = conf[c, :].sum() - tp
        denom = tp + fp + fn
        if denom > 0:
            ious.append(tp / denom)
    return float(np.mean(ious)) if ious else 0.0


MODEL_FORMAT_VERSION = 1


def save_model(model: SegModel, path):
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "weights": model.weights.tolist(),
        "bias": model.bias.tolist(),
        "version": model.version,
        "seed": model.seed,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_model(path) -> SegModel:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format: {payload.get('format_version')}")
    weights = np.asarray(payload["weights"], dtype=np.float64)
    bias = np.asarray(payload["bias"], dtype=np.float64)
    return SegModel(
        weights=weights,
        bias=bias,
        vel_w=np.zeros_like(weights),
        vel_b=np.zeros_like(bias),
        version=payload["version"],
        seed=payload["seed"],
    )
