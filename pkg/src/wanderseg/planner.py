"""Frontier selection, shortest paths and local-goal encoding on the map.

Paths are 4-connected over Navigable cells. The grid is uniform so
Dijkstra reduces to BFS, but the implementation accepts per-cell entry
costs. Tie-breaking is deterministic: equal-cost expansions pop in
insertion order with neighbors visited N, E, S, W.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .mapper import NAVIGABLE, UNKNOWN, OccupancyMap
from .world import Pose, heading_angle, wrap_angle

NEIGHBOR_ORDER = ((-1, 0), (0, 1), (1, 0), (0, -1))  # N, E, S, W


class Unreachable(Exception):
    pass


@dataclass(frozen=True)
class PolarGoal:
    r: float    # meters
    phi: float  # radians in (-pi, pi]


@dataclass
class NavPlan:
    frontier_goal: tuple
    waypoints: list
    active_index: int = 0
    # plan-maintenance flags (see harness.episode)
    exact_arrival: bool = False
    advance_locked: bool = False

    @property
    def active_waypoint(self):
        return self.waypoints[self.active_index]

    @property
    def on_last_waypoint(self):
        return self.active_index == len(self.waypoints) - 1

    def is_valid(self, occ: OccupancyMap) -> bool:
        return all(
            occ.state[r, c] == NAVIGABLE
            for r, c in self.waypoints[self.active_index:]
        )


def frontier_points(occ: OccupancyMap) -> list:
    """Navigable cells with at least one 4-neighbor still Unknown,
    in row-major order. Empty means exploration is complete.
    """
    nav = occ.state == NAVIGABLE
    unk = occ.state == UNKNOWN
    near_unknown = np.zeros_like(nav)
    near_unknown[:-1, :] |= unk[1:, :]
    near_unknown[1:, :] |= unk[:-1, :]
    near_unknown[:, :-1] |= unk[:, 1:]
    near_unknown[:, 1:] |= unk[:, :-1]
    rows, cols = np.nonzero(nav & near_unknown)
    return list(zip(rows.tolist(), cols.tolist()))


def distance_field(occ: OccupancyMap, source) -> np.ndarray:
    """BFS hop distances from source over Navigable cells (-1 unreachable)."""
    r, c = source
    if occ.state[r, c] != NAVIGABLE:
        raise ValueError(f"source {source} is not Navigable")
    return kernels.bfs_grid(occ.navigable_mask(), int(r), int(c))


def select_frontier(occ: OccupancyMap, pose: Pose):
    """Closest reachable frontier by geodesic distance; ties broken by
    (row, col) order. None when no frontier is reachable.
    """
    frontiers = frontier_points(occ)
    if not frontiers:
        return None
    dist = distance_field(occ, (pose.row, pose.col))
    best = None
    best_d = None
    for cell in frontiers:  # already in (row, col) order
        d = int(dist[cell])
        if d < 0:
            continue
        if best_d is None or d < best_d:
            best, best_d = cell, d
    return best


def shortest_path(occ: OccupancyMap, start, goal, cost=None) -> list:
    """Dijkstra over Navigable cells; unit edge weights unless a per-cell
    entry-cost array is given. Raises Unreachable when no path exists.
    """
    for name, cell in (("start", start), ("goal", goal)):
        if occ.state[cell] != NAVIGABLE:
            raise ValueError(f"{name} {cell} is not Navigable")
    rows, cols = occ.shape
    nav = occ.state == NAVIGABLE
    dist = np.full((rows, cols), np.inf)
    parent = {}
    dist[start] = 0.0
    counter = 0
    heap = [(0.0, counter, start)]
    while heap:
        d, _, cell = heapq.heappop(heap)
        if cell == goal:
            break
        if d > dist[cell]:
            continue
        r, c = cell
        for dr, dc in NEIGHBOR_ORDER:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < rows and 0 <= nc < cols) or not nav[nr, nc]:
                continue
            step_cost = 1.0 if cost is None else float(cost[nr, nc])
            nd = d + step_cost
            if nd < dist[nr, nc]:
                dist[nr, nc] = nd
                parent[(nr, nc)] = cell
                counter += 1
                heapq.heappush(heap, (nd, counter, (nr, nc)))
    if not np.isfinite(dist[goal]):
        raise Unreachable(f"no path from {start} to {goal}")
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def split_by_curvature(path: list) -> list:
    """Waypoints at every step-direction change, plus the final cell."""
    if len(path) <= 2:
        return [path[-1]]
    waypoints = []
    prev_dir = (path[1][0] - path[0][0], path[1][1] - path[0][1])
    for i in range(1, len(path) - 1):
        d = (path[i + 1][0] - path[i][0], path[i + 1][1] - path[i][1])
        if d != prev_dir:
            waypoints.append(path[i])
            prev_dir = d
    waypoints.append(path[-1])
    return waypoints


def polar_goal(pose: Pose, goal, cell_size: float, n_headings: int) -> PolarGoal:
    """Goal cell relative to the pose: center-to-center range and bearing
    minus heading, wrapped to (-pi, pi]."""
    dy = goal[0] - pose.row
    dx = goal[1] - pose.col
    r = math.hypot(dx, dy) * cell_size
    if r == 0.0:
        return PolarGoal(0.0, 0.0)
    bearing = math.atan2(dy, dx)
    phi = wrap_angle(bearing - heading_angle(pose.heading, n_headings))
    return PolarGoal(r, phi)


def geodesic_distance(occ: OccupancyMap, a, b) -> float:
    """Hop-count distance in meters over Navigable cells; inf if disconnected."""
    if occ.state[a] != NAVIGABLE or occ.state[b] != NAVIGABLE:
        raise ValueError("geodesic endpoints must be Navigable")
    d = int(distance_field(occ, a)[b])
    return math.inf if d < 0 else d * occ.cell_size


class GoalDistanceCache:
    """Distance field from the active waypoint, recomputed only when the
    map's derived state or the goal changes. Hot path of the exploration
    reward."""

    def __init__(self):
        self._goal = None
        self._revision = -1
        self._field = None

    def field(self, occ: OccupancyMap, goal):
        if self._goal != goal or self._revision != occ.revision:
            self._field = kernels.bfs_grid(occ.navigable_mask(), goal[0], goal[1])
            self._goal = goal
            self._revision = occ.revision
        return self._field

    def distance(self, occ: OccupancyMap, goal, cell) -> float:
        d = int(self.field(occ, goal)[cell])
        return math.inf if d < 0 else d * occ.cell_size
