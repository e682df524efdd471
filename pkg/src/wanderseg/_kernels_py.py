"""Pure-Python fallback for the grid kernels.

Same contracts as the compiled twin in ``_kernels_cy.pyx``; the compiled
module is built with FP contraction disabled so both backends produce
identical numbers. Coordinates are in cell units: cell (r, c) spans
x in [c, c+1), y in [r, r+1), and a pose sits at the cell center.
"""

from collections import deque

import numpy as np

BACKEND = "python"

FREE = 0
WALL = 1

# Face indices on a wall cell, named for the free side they touch.
FACE_N = 0  # entered stepping +y (from the row above)
FACE_E = 1  # entered stepping -x
FACE_S = 2  # entered stepping -y
FACE_W = 3  # entered stepping +x


def raycast(grid, pos_x, pos_y, angles):
    """Cast rays from (pos_x, pos_y) until the first Wall cell.

    The boundary of ``grid`` is Wall, so every ray terminates. Returns
    (t_enter, hit_row, hit_col, hit_face) per ray, where t_enter is the
    distance (cell units) at which the ray enters the hit cell. Ties
    between an x- and y-boundary crossing step x first.
    """
    n = angles.shape[0]
    t_enter = np.empty(n, dtype=np.float64)
    hit_row = np.empty(n, dtype=np.int32)
    hit_col = np.empty(n, dtype=np.int32)
    hit_face = np.empty(n, dtype=np.int8)

    for i in range(n):
        dx = np.cos(angles[i])
        dy = np.sin(angles[i])
        col = int(np.floor(pos_x))
        row = int(np.floor(pos_y))

        if dx > 0.0:
            step_x, t_max_x, t_delta_x = 1, (col + 1.0 - pos_x) / dx, 1.0 / dx
        elif dx < 0.0:
            step_x, t_max_x, t_delta_x = -1, (col - pos_x) / dx, -1.0 / dx
        else:
            step_x, t_max_x, t_delta_x = 0, np.inf, np.inf
        if dy > 0.0:
            step_y, t_max_y, t_delta_y = 1, (row + 1.0 - pos_y) / dy, 1.0 / dy
        elif dy < 0.0:
            step_y, t_max_y, t_delta_y = -1, (row - pos_y) / dy, -1.0 / dy
        else:
            step_y, t_max_y, t_delta_y = 0, np.inf, np.inf

        while True:
            if t_max_x <= t_max_y:
                t = t_max_x
                col += step_x
                t_max_x += t_delta_x
                face = FACE_W if step_x > 0 else FACE_E
            else:
                t = t_max_y
                row += step_y
                t_max_y += t_delta_y
                face = FACE_N if step_y > 0 else FACE_S
            if grid[row, col] == WALL:
                t_enter[i] = t
                hit_row[i] = row
                hit_col[i] = col
                hit_face[i] = face
                break

    return t_enter, hit_row, hit_col, hit_face


def accumulate_votes(nav_votes, obs_votes, pos_x, pos_y, dir_x, dir_y,
                     depth_cells, hit_row, hit_col, clamped, surf_x, surf_y):
    """Cast occupancy votes for one view: floor(depth) navigable samples at
    whole-cell spacing along each ray plus one terminal vote (obstacle at the
    hit cell, or navigable at the range-clamp point). Exactly
    floor(depth) + 1 votes per ray.
    """
    n = depth_cells.shape[0]
    for i in range(n):
        nsamp = int(np.floor(depth_cells[i]))
        for k in range(nsamp):
            cx = int(np.floor(pos_x + k * dir_x[i]))
            cy = int(np.floor(pos_y + k * dir_y[i]))
            nav_votes[cy, cx] += 1
        if clamped[i]:
            cx = int(np.floor(surf_x[i]))
            cy = int(np.floor(surf_y[i]))
            nav_votes[cy, cx] += 1
        else:
            obs_votes[hit_row[i], hit_col[i]] += 1


def bfs_grid(passable, start_r, start_c):
    """4-connected hop distances from (start_r, start_c) over True cells.

    Returns an int32 grid, -1 where unreachable. The start cell must be
    passable.
    """
    h, w = passable.shape
    dist = np.full((h, w), -1, dtype=np.int32)
    dist[start_r, start_c] = 0
    queue = deque([(start_r, start_c)])
    while queue:
        r, c = queue.popleft()
        d = dist[r, c] + 1
        # neighbor order N, E, S, W
        for nr, nc in ((r - 1, c), (r, c + 1), (r + 1, c), (r, c - 1)):
            if 0 <= nr < h and 0 <= nc < w and passable[nr, nc] and dist[nr, nc] < 0:
                dist[nr, nc] = d
                queue.append((nr, nc))
    return dist
