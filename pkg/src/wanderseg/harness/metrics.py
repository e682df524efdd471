"""Episode-log metrics: explored area per annotation and per motion step,
and windowed mIoU over annotation indices.

Annotate actions do not move the agent, so the per-step exploration rate
divides by motion steps only; that makes the metric identical across
agents that move the same way but annotate differently.
"""

import math

from .episode import EpisodeLog


def metric_dA_per_annot(log: EpisodeLog) -> float:
    """Mean explored-area gain between consecutive annotation events
    (the first event counts from an empty map). NaN with no annotations."""
    areas = [s.explored_m2 for s in log.steps if s.annotated]
    if not areas:
        return math.nan
    prev = 0.0
    deltas = []
    for a in areas:
        deltas.append(a - prev)
        prev = a
    return sum(deltas) / len(deltas)


def metric_dA_per_step(log: EpisodeLog) -> float:
    """Final explored area per motion step. NaN if the agent never moved."""
    if log.motion_steps == 0:
        return math.nan
    return log.final_explored_m2 / log.motion_steps


def metric_miou_window(log: EpisodeLog, a: int, b: int) -> float:
    """Mean of the mIoU checkpoints for annotations a..b (1-based,
    inclusive). NaN when the episode produced fewer than a annotations."""
    if not 1 <= a <= b:
        raise ValueError("need 1 <= a <= b")
    if log.annotation_count < a:
        return math.nan
    window = log.miou_checkpoints[a - 1:b]
    return sum(window) / len(window)


def metric_annots(log: EpisodeLog) -> int:
    return log.annotation_count


def explored_fraction(log: EpisodeLog) -> float:
    if log.total_navigable_m2 == 0:
        return math.nan
    return log.final_explored_m2 / log.total_navigable_m2


def pooled_dA_per_annot(logs: list) -> float:
    """Mean explored-area gain per annotation event pooled over a whole
    sequence of episodes. At desk scale some episodes carry only one or two
    events, so pooling gives the stable sequence-level aggregate."""
    deltas = []
    for log in logs:
        prev = 0.0
        for s in log.steps:
            if s.annotated:
                deltas.append(s.explored_m2 - prev)
                prev = s.explored_m2
    return sum(deltas) / len(deltas) if deltas else math.nan


def pooled_miou_window(logs: list, a: int, b: int) -> float:
    """Mean of the annotation-a..b mIoU checkpoints pooled over episodes."""
    if not 1 <= a <= b:
        raise ValueError("need 1 <= a <= b")
    vals = []
    for log in logs:
        vals.extend(log.miou_checkpoints[a - 1:b])
    return sum(vals) / len(vals) if vals else math.nan
