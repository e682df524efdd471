"""Top-down occupancy mapping by per-cell majority voting.

Each observed ray casts floor(depth/cell) navigable votes at whole-cell
spacing along the ray plus one terminal vote: obstacle at the hit cell, or
navigable at the range-clamp point when nothing was hit in range. A cell
with no votes is Unknown; otherwise majority wins and ties count as
Obstacle so planning never crosses contested cells.
"""

import numpy as np

from . import kernels
from .world import Observation

UNKNOWN = 0
NAVIGABLE = 1
OBSTACLE = 2

_STATE_CHARS = {UNKNOWN: "?", NAVIGABLE: ".", OBSTACLE: "#"}


class OccupancyMap:
    def __init__(self, rows, cols, cell_size):
        self.cell_size = cell_size
        self.nav_votes = np.zeros((rows, cols), dtype=np.int64)
        self.obs_votes = np.zeros((rows, cols), dtype=np.int64)
        self.state = np.zeros((rows, cols), dtype=np.uint8)
        self.revision = 0  # bumped whenever a derived cell state changes

    @property
    def shape(self):
        return self.nav_votes.shape

    @classmethod
    def for_scene(cls, scene):
        return cls(scene.grid.shape[0], scene.grid.shape[1], scene.cell_size)

    def _derive_state(self):
        known = (self.nav_votes + self.obs_votes) > 0
        state = np.zeros(self.shape, dtype=np.uint8)
        state[known & (self.nav_votes > self.obs_votes)] = NAVIGABLE
        state[known & (self.obs_votes >= self.nav_votes)] = OBSTACLE
        return state

    def update(self, obs: Observation):
        """Integrate one observation's votes."""
        rows, cols = self.shape
        if not (0 <= obs.pose.row < rows and 0 <= obs.pose.col < cols):
            raise ValueError(f"observation pose {obs.pose} outside map bounds")
        depth_cells = np.ascontiguousarray(obs.depth / self.cell_size)
        kernels.accumulate_votes(
            self.nav_votes, self.obs_votes,
            obs.pos_x, obs.pos_y,
            np.ascontiguousarray(obs.dir_x), np.ascontiguousarray(obs.dir_y),
            depth_cells,
            np.ascontiguousarray(obs.hit_row), np.ascontiguousarray(obs.hit_col),
            np.ascontiguousarray(obs.clamped, dtype=np.uint8),
            np.ascontiguousarray(obs.surf_x), np.ascontiguousarray(obs.surf_y),
        )
        new_state = self._derive_state()
        if not np.array_equal(new_state, self.state):
            self.state = new_state
            self.revision += 1

    def navigable_mask(self):
        return np.ascontiguousarray(self.state == NAVIGABLE, dtype=np.uint8)

    def explored_area(self) -> float:
        """Square meters currently marked Navigable."""
        return float(np.sum(self.state == NAVIGABLE)) * self.cell_size ** 2

    def total_votes(self):
        return int(self.nav_votes.sum() + self.obs_votes.sum())

    def to_ascii(self) -> str:
        rows = []
        for r in range(self.shape[0]):
            rows.append("".join(_STATE_CHARS[int(s)] for s in self.state[r]))
        return "\n".join(rows)
