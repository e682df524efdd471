"""Warp the most recent annotation into the agent's current view.

Pose and depth give every ray an exact world hit point, so instead of
estimating optical flow we match surfaces geometrically: a current ray
inherits a label when some annotated ray hit the same surface (same wall
cell and face, or the same floor cell for range-clamped rays) within half
a cell. Everything else gets the reserved no-label id, which is
``n_classes`` (one past the last real class).
"""

import numpy as np

from ..world import Observation

NO_LABEL_OFFSET = 1  # propagated masks use n_classes + NO_LABEL_OFFSET - 1 ids

MATCH_RADIUS_CELLS = 0.5


def _surface_keys(obs: Observation):
    keys = []
    n = obs.gt_mask.shape[0]
    for i in range(n):
        if obs.clamped[i]:
            keys.append((-1, int(np.floor(obs.surf_y[i])), int(np.floor(obs.surf_x[i]))))
        else:
            keys.append((int(obs.hit_face[i]), int(obs.hit_row[i]), int(obs.hit_col[i])))
    return keys


def empty_mask(n_rays: int, n_classes: int) -> np.ndarray:
    return np.full(n_rays, n_classes, dtype=np.int16)


def propagate_mask(last_annotation, current_obs: Observation, n_classes: int) -> np.ndarray:
    """Labels of the last annotated view seen from the current pose;
    no-label where the current view shows surfaces the annotation did not
    cover. Returns all no-label when no annotation exists yet."""
    n_rays = current_obs.gt_mask.shape[0]
    out = empty_mask(n_rays, n_classes)
    if last_annotation is None:
        return out
    ann_obs, ann_labels = last_annotation

    by_surface = {}
    for j, key in enumerate(_surface_keys(ann_obs)):
        by_surface.setdefault(key, []).append(j)

    for i, key in enumerate(_surface_keys(current_obs)):
        candidates = by_surface.get(key)
        if not candidates:
            continue
        dx = ann_obs.surf_x[candidates] - current_obs.surf_x[i]
        dy = ann_obs.surf_y[candidates] - current_obs.surf_y[i]
        d2 = dx * dx + dy * dy
        best = int(np.argmin(d2))
        if d2[best] <= MATCH_RADIUS_CELLS ** 2:
            out[i] = ann_labels[candidates[best]]
    return out
