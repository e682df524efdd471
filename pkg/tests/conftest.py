import numpy as np
import pytest

from wanderseg import kernels
from wanderseg.world import FREE, WALL, Pose, Scene, WorldParams, generate_scene


def small_params(**kw):
    defaults = dict(rows=16, cols=16, room_range=(1, 2))
    defaults.update(kw)
    return WorldParams(**defaults)


@pytest.fixture(scope="session")
def params():
    return small_params()


@pytest.fixture(scope="session")
def scene(params):
    return generate_scene(params, 3)


def box_scene(rows=8, cols=8, face_class=3, floor_class=0, params=None, seed=99):
    """Hand-built empty rectangular room with every exposed face sharing
    one class; bypasses the generator so geometry is fully controlled."""
    if params is None:
        params = small_params(rows=rows, cols=cols, sigma_scene=0.0, sigma_pix=0.0)
    grid = np.full((rows, cols), WALL, dtype=np.uint8)
    grid[1:-1, 1:-1] = FREE
    floor = np.full((rows, cols), -1, dtype=np.int16)
    floor[grid == FREE] = floor_class
    wall_face = np.full((rows, cols, 4), -1, dtype=np.int16)
    for r in range(rows):
        for c in range(cols):
            if grid[r, c] != WALL:
                continue
            for face, (dr, dc) in {
                kernels.FACE_N: (-1, 0), kernels.FACE_E: (0, 1),
                kernels.FACE_S: (1, 0), kernels.FACE_W: (0, -1),
            }.items():
                nr, nc = r + dr, c + dc
                if 0 <= nr < rows and 0 <= nc < cols and grid[nr, nc] == FREE:
                    wall_face[r, c, face] = face_class
    return Scene(
        grid=grid, floor_class=floor, wall_face_class=wall_face,
        appearance=np.zeros((params.n_classes, params.feature_dim)),
        seed=seed, id=f"box-{rows}x{cols}", params=params,
    )


def flood_fill_free(grid):
    """Independent connectivity oracle: set-based BFS over Free cells."""
    free = {(r, c) for r, c in zip(*np.nonzero(grid == FREE))}
    if not free:
        return set()
    start = next(iter(sorted(free)))
    seen = {start}
    stack = [start]
    while stack:
        r, c = stack.pop()
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if (nr, nc) in free and (nr, nc) not in seen:
                seen.add((nr, nc))
                stack.append((nr, nc))
    return seen
