"""Procedural 2-D building scenes and the embodied agent's action/sensor model.

A scene is a grid of Free/Wall cells whose exposed wall faces and floor
cells carry semantic classes. The agent observes a 1-D egocentric "image"
of W rays; each ray carries a depth, the ground-truth class of the surface
it hits, and a feature vector (global class prototype + per-scene
appearance offset + per-pixel noise).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from . import kernels
from .kernels import FREE, WALL


class Action(IntEnum):
    MOVE_FORWARD = 0
    ROTATE_LEFT = 1
    ROTATE_RIGHT = 2
    ANNOTATE = 3


class SceneGenerationError(Exception):
    pass


SCENE_FORMAT_VERSION = 1

# Floor cells carry class 0 by default and plain wall faces class 1;
# "object" runs on walls use the remaining ids.
FLOOR_CLASS = 0
WALL_CLASS = 1

# (dr, dc) from a wall cell to the free cell its face touches.
FACE_NEIGHBOR = {
    kernels.FACE_N: (-1, 0),
    kernels.FACE_E: (0, 1),
    kernels.FACE_S: (1, 0),
    kernels.FACE_W: (0, -1),
}


def make_prototypes(n_classes, feature_dim, seed=0, min_dist=1.0):
    """Unit-norm class prototypes with enforced pairwise distance."""
    rng = np.random.default_rng(seed)
    for _ in range(200):
        protos = rng.standard_normal((n_classes, feature_dim))
        protos /= np.linalg.norm(protos, axis=1, keepdims=True)
        dists = np.linalg.norm(protos[:, None, :] - protos[None, :, :], axis=2)
        np.fill_diagonal(dists, np.inf)
        if dists.min() >= min_dist:
            return protos
    raise SceneGenerationError(
        f"could not draw {n_classes} prototypes in {feature_dim}-d with "
        f"min pairwise distance {min_dist}"
    )


@dataclass
class WorldParams:
    rows: int = 28
    cols: int = 28
    room_range: tuple = (2, 4)
    n_classes: int = 12
    top_k: int = 10
    feature_dim: int = 16
    prototypes: np.ndarray = None
    sigma_scene: float = 0.15
    sigma_pix: float = 0.3
    fov_deg: float = 90.0
    n_rays: int = 64
    max_range: float = 10.0
    cell_size: float = 0.5
    turn_angle_deg: int = 30
    obstacle_density: float = 0.02
    object_rate: float = 0.5
    max_object_len: int = 2

    def __post_init__(self):
        if self.prototypes is None:
            self.prototypes = make_prototypes(self.n_classes, self.feature_dim)
        self.prototypes = np.asarray(self.prototypes, dtype=np.float64)
        self.validate()

    def validate(self):
        if not (self.n_classes >= self.top_k >= 2):
            raise ValueError("need n_classes >= top_k >= 2")
        if self.sigma_scene < 0 or self.sigma_pix < 0:
            raise ValueError("sigma values must be >= 0")
        if self.n_rays < 8:
            raise ValueError("need at least 8 rays")
        if self.rows < 3 or self.cols < 3:
            raise ValueError("grid must be at least 3x3")
        if 360 % self.turn_angle_deg != 0:
            raise ValueError("turn angle must divide 360")
        if not (0 < self.fov_deg <= 360):
            raise ValueError("fov must be in (0, 360]")
        if self.max_range < self.cell_size:
            raise ValueError("max_range must cover at least one cell")
        if self.prototypes.shape != (self.n_classes, self.feature_dim):
            raise ValueError("prototypes must be (n_classes, feature_dim)")

    @property
    def n_headings(self):
        return 360 // self.turn_angle_deg

    def to_dict(self):
        d = self.__dict__.copy()
        d["prototypes"] = self.prototypes.tolist()
        d["room_range"] = list(self.room_range)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["prototypes"] = np.asarray(d["prototypes"], dtype=np.float64)
        d["room_range"] = tuple(d["room_range"])
        return cls(**d)


@dataclass(frozen=True)
class Pose:
    row: int
    col: int
    heading: int  # index in [0, n_headings)


@dataclass
class Scene:
    grid: np.ndarray            # (rows, cols) uint8, FREE/WALL
    floor_class: np.ndarray     # (rows, cols) int16, -1 on walls
    wall_face_class: np.ndarray  # (rows, cols, 4) int16, -1 where not exposed
    appearance: np.ndarray      # (n_classes, feature_dim) per-scene offsets
    seed: int
    id: str
    params: WorldParams

    @property
    def cell_size(self):
        return self.params.cell_size

    def free_cells(self):
        rows, cols = np.nonzero(self.grid == FREE)
        return list(zip(rows.tolist(), cols.tolist()))


@dataclass
class Observation:
    image: np.ndarray         # (n_rays, feature_dim)
    depth: np.ndarray         # (n_rays,) meters
    gt_mask: np.ndarray       # (n_rays,) int16
    pose: Pose
    ray_headings: np.ndarray  # (n_rays,) absolute radians
    # geometry internals (cell units) used by the mapper and mask propagation
    dir_x: np.ndarray = field(repr=False, default=None)
    dir_y: np.ndarray = field(repr=False, default=None)
    hit_row: np.ndarray = field(repr=False, default=None)
    hit_col: np.ndarray = field(repr=False, default=None)
    hit_face: np.ndarray = field(repr=False, default=None)
    clamped: np.ndarray = field(repr=False, default=None)
    surf_x: np.ndarray = field(repr=False, default=None)
    surf_y: np.ndarray = field(repr=False, default=None)
    pos_x: float = 0.0
    pos_y: float = 0.0


def heading_angle(heading, n_headings):
    """Absolute angle of a heading index; x is +col, y is +row."""
    return 2.0 * np.pi * heading / n_headings


def wrap_angle(phi):
    """Wrap to (-pi, pi]."""
    phi = phi % (2.0 * np.pi)
    if phi > np.pi:
        phi -= 2.0 * np.pi
    return phi


# ---------------------------------------------------------------------------
# scene generation


def _carve_rooms(grid, rng, room_range, min_size=3):
    """BSP-style splits: each split adds a wall line with one door punched,
    so the free region stays connected by construction. Returns leaf rects
    as (r0, c0, r1, c1) half-open interior regions.
    """
    rows, cols = grid.shape
    target = int(rng.integers(room_range[0], room_range[1] + 1))
    rooms = [(1, 1, rows - 1, cols - 1)]
    while len(rooms) < target:
        candidates = [
            (i, r) for i, r in enumerate(rooms)
            if (r[2] - r[0] >= 2 * min_size + 1) or (r[3] - r[1] >= 2 * min_size + 1)
        ]
        if not candidates:
            break
        i, (r0, c0, r1, c1) = candidates[int(rng.integers(len(candidates)))]
        can_h = r1 - r0 >= 2 * min_size + 1   # horizontal wall (splits rows)
        can_v = c1 - c0 >= 2 * min_size + 1
        if can_h and can_v:
            horizontal = bool(rng.integers(2))
        else:
            horizontal = can_h
        if horizontal:
            wall_r = int(rng.integers(r0 + min_size, r1 - min_size))
            door_c = int(rng.integers(c0, c1))
            grid[wall_r, c0:c1] = WALL
            grid[wall_r, door_c] = FREE
            rooms[i] = (r0, c0, wall_r, c1)
            rooms.append((wall_r + 1, c0, r1, c1))
        else:
            wall_c = int(rng.integers(c0 + min_size, c1 - min_size))
            door_r = int(rng.integers(r0, r1))
            grid[r0:r1, wall_c] = WALL
            grid[door_r, wall_c] = FREE
            rooms[i] = (r0, c0, r1, wall_c)
            rooms.append((r0, wall_c + 1, r1, c1))
    return rooms


def _free_connected(grid):
    free_count = int(np.sum(grid == FREE))
    if free_count == 0:
        return False
    r, c = np.argwhere(grid == FREE)[0]
    dist = kernels.bfs_grid(
        np.ascontiguousarray(grid == FREE, dtype=np.uint8), int(r), int(c)
    )
    return int(np.sum(dist >= 0)) == free_count


def _scatter_obstacles(grid, rng, density):
    free = np.argwhere(grid == FREE)
    n = int(round(density * len(free)))
    order = rng.permutation(len(free))
    placed = 0
    for idx in order:
        if placed >= n:
            break
        r, c = free[idx]
        grid[r, c] = WALL
        if _free_connected(grid):
            placed += 1
        else:
            grid[r, c] = FREE


def _exposed_faces(grid):
    faces = []
    rows, cols = grid.shape
    for r in range(rows):
        for c in range(cols):
            if grid[r, c] != WALL:
                continue
            for face, (dr, dc) in FACE_NEIGHBOR.items():
                nr, nc = r + dr, c + dc
                if 0 <= nr < rows and 0 <= nc < cols and grid[nr, nc] == FREE:
                    faces.append((r, c, face))
    return faces


def _face_runs(faces):
    """Group exposed faces into maximal straight runs along walls."""
    runs = []
    face_set = set(faces)
    seen = set()
    for r, c, f in sorted(face_set):
        if (r, c, f) in seen:
            continue
        # N/S faces run along columns, E/W faces along rows
        dr, dc = (0, 1) if f in (kernels.FACE_N, kernels.FACE_S) else (1, 0)
        rr, cc = r, c
        while (rr - dr, cc - dc, f) in face_set:
            rr, cc = rr - dr, cc - dc
        run = []
        while (rr, cc, f) in face_set:
            run.append((rr, cc, f))
            seen.add((rr, cc, f))
            rr, cc = rr + dr, cc + dc
        runs.append(run)
    return runs


def _assign_surface_classes(scene_grid, rng, params, rooms):
    rows, cols = scene_grid.shape
    floor_class = np.full((rows, cols), -1, dtype=np.int16)
    floor_class[scene_grid == FREE] = FLOOR_CLASS
    if params.n_classes > 2:
        for r0, c0, r1, c1 in rooms:
            if rng.random() < 0.5:
                cls = int(rng.integers(2, params.n_classes))
                region = scene_grid[r0:r1, c0:c1] == FREE
                floor_class[r0:r1, c0:c1][region] = cls

    wall_face_class = np.full((rows, cols, 4), -1, dtype=np.int16)
    faces = _exposed_faces(scene_grid)
    for r, c, f in faces:
        wall_face_class[r, c, f] = WALL_CLASS

    if params.n_classes > 2:
        runs = _face_runs(faces)
        n_objects = int(round(params.object_rate * len(faces)))
        taken = set()
        for _ in range(n_objects):
            run = runs[int(rng.integers(len(runs)))]
            length = int(rng.integers(1, params.max_object_len + 1))
            start = int(rng.integers(len(run)))
            cls = int(rng.integers(2, params.n_classes))
            segment = run[start:start + length]
            if any(key in taken for key in segment):
                continue
            for rr, cc, ff in segment:
                wall_face_class[rr, cc, ff] = cls
                taken.add((rr, cc, ff))
    return floor_class, wall_face_class


def generate_scene(params: WorldParams, seed: int, max_retries: int = 20) -> Scene:
    """Generate a connected multi-room scene, deterministic per (params, seed)."""
    params.validate()
    for attempt in range(max_retries):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt]))
        grid = np.full((params.rows, params.cols), WALL, dtype=np.uint8)
        grid[1:-1, 1:-1] = FREE
        rooms = _carve_rooms(grid, rng, params.room_range)
        _scatter_obstacles(grid, rng, params.obstacle_density)
        if not _free_connected(grid):
            continue
        floor_class, wall_face_class = _assign_surface_classes(grid, rng, params, rooms)
        appearance = rng.standard_normal((params.n_classes, params.feature_dim))
        appearance *= params.sigma_scene
        return Scene(
            grid=grid,
            floor_class=floor_class,
            wall_face_class=wall_face_class,
            appearance=appearance,
            seed=seed,
            id=f"scene-{seed:05d}",
            params=params,
        )
    raise SceneGenerationError(
        f"no valid scene after {max_retries} attempts (seed={seed})"
    )


# ---------------------------------------------------------------------------
# observation rendering


def ray_offsets(params):
    """Pixel-center ray offsets across the field of view."""
    fov = np.deg2rad(params.fov_deg)
    i = np.arange(params.n_rays, dtype=np.float64)
    return -fov / 2.0 + (i + 0.5) * fov / params.n_rays


def render_view(scene: Scene, pose: Pose) -> Observation:
    """Render the egocentric view: depth, ground-truth class and features
    per ray. Per-pixel noise is seeded by (scene seed, pose), so the same
    viewpoint always renders identically.
    """
    p = scene.params
    if scene.grid[pose.row, pose.col] != FREE:
        raise ValueError(f"pose {pose} is not on a Free cell")
    pos_x = pose.col + 0.5
    pos_y = pose.row + 0.5
    angles = heading_angle(pose.heading, p.n_headings) + ray_offsets(p)

    t_enter, hit_row, hit_col, hit_face = kernels.raycast(
        scene.grid, pos_x, pos_y, angles
    )
    dir_x = np.cos(angles)
    dir_y = np.sin(angles)

    max_range_cells = p.max_range / p.cell_size
    depth_cells = t_enter + 0.5
    clamped = depth_cells > max_range_cells
    depth_cells = np.minimum(depth_cells, max_range_cells)

    # surface point per ray: wall-entry point for hits, a safely-in-free
    # point at the range clamp otherwise
    surf_t = np.where(clamped, np.minimum(max_range_cells, t_enter - 0.5), t_enter)
    surf_x = pos_x + surf_t * dir_x
    surf_y = pos_y + surf_t * dir_y

    gt = np.empty(p.n_rays, dtype=np.int16)
    hit_idx = ~clamped
    gt[hit_idx] = scene.wall_face_class[
        hit_row[hit_idx], hit_col[hit_idx], hit_face[hit_idx]
    ]
    if clamped.any():
        fr = np.floor(surf_y[clamped]).astype(np.int64)
        fc = np.floor(surf_x[clamped]).astype(np.int64)
        gt[clamped] = scene.floor_class[fr, fc]
    if (gt < 0).any():
        raise AssertionError("ray hit an unclassified surface")

    noise_rng = np.random.default_rng(
        np.random.SeedSequence([scene.seed, pose.row, pose.col, pose.heading])
    )
    image = p.prototypes[gt] + scene.appearance[gt]
    if p.sigma_pix > 0:
        image = image + p.sigma_pix * noise_rng.standard_normal(image.shape)

    return Observation(
        image=image,
        depth=depth_cells * p.cell_size,
        gt_mask=gt,
        pose=pose,
        ray_headings=angles,
        dir_x=dir_x,
        dir_y=dir_y,
        hit_row=hit_row,
        hit_col=hit_col,
        hit_face=hit_face,
        clamped=clamped,
        surf_x=surf_x,
        surf_y=surf_y,
        pos_x=pos_x,
        pos_y=pos_y,
    )


def forward_axis(heading, n_headings):
    """Nearest axis-aligned (dr, dc) projection of a heading (half-up ties)."""
    deg = 360.0 * heading / n_headings
    axis = int(np.floor(deg / 90.0 + 0.5)) % 4
    return [(0, 1), (1, 0), (0, -1), (-1, 0)][axis]  # E, S, W, N


def step(scene: Scene, pose: Pose, action: Action) -> Pose:
    """Apply one action. MoveForward into a Wall is a no-op (collision)."""
    k = scene.params.n_headings
    if action == Action.ROTATE_LEFT:
        return replace(pose, heading=(pose.heading + 1) % k)
    if action == Action.ROTATE_RIGHT:
        return replace(pose, heading=(pose.heading - 1) % k)
    if action == Action.ANNOTATE:
        return pose
    if action == Action.MOVE_FORWARD:
        dr, dc = forward_axis(pose.heading, k)
        nr, nc = pose.row + dr, pose.col + dc
        if scene.grid[nr, nc] == FREE:
            return replace(pose, row=nr, col=nc)
        return pose
    raise ValueError(f"unknown action {action!r}")


def sample_reference_views(scene: Scene, n: int, seed: int) -> list:
    """n views at poses uniform over Free cells x headings, fixed per
    (scene, seed). These are the held-out views every evaluation reuses.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([scene.seed, seed]))
    cells = scene.free_cells()
    k = scene.params.n_headings
    views = []
    for _ in range(n):
        r, c = cells[int(rng.integers(len(cells)))]
        views.append(render_view(scene, Pose(r, c, int(rng.integers(k)))))
    return views


def sample_start_pose(scene: Scene) -> Pose:
    """Agent start pose, a function of the scene only (agent-independent)."""
    rng = np.random.default_rng(np.random.SeedSequence([scene.seed, 0xA11]))
    cells = scene.free_cells()
    r, c = cells[int(rng.integers(len(cells)))]
    return Pose(r, c, int(rng.integers(scene.params.n_headings)))


def total_navigable_area(scene: Scene) -> float:
    """Free-cell count times cell area, in square meters."""
    return float(np.sum(scene.grid == FREE)) * scene.cell_size ** 2


# ---------------------------------------------------------------------------
# serialization


def _rle_encode(flat):
    runs = []
    prev = int(flat[0])
    count = 0
    for v in flat:
        v = int(v)
        if v == prev:
            count += 1
        else:
            runs.append([prev, count])
            prev, count = v, 1
    runs.append([prev, count])
    return runs


def _rle_decode(runs, size):
    out = np.empty(size, dtype=np.int64)
    pos = 0
    for value, count in runs:
        out[pos:pos + count] = value
        pos += count
    if pos != size:
        raise ValueError("run-length data does not match grid size")
    return out


def scene_to_dict(scene: Scene) -> dict:
    faces = np.argwhere(scene.wall_face_class >= 0)
    return {
        "format_version": SCENE_FORMAT_VERSION,
        "id": scene.id,
        "seed": scene.seed,
        "grid_shape": list(scene.grid.shape),
        "grid_rle": _rle_encode(scene.grid.ravel()),
        "floor_class_rle": _rle_encode(scene.floor_class.ravel()),
        "wall_faces": [
            [int(r), int(c), int(f), int(scene.wall_face_class[r, c, f])]
            for r, c, f in faces
        ],
        "appearance": scene.appearance.tolist(),
        "world_params": scene.params.to_dict(),
    }


def scene_from_dict(d: dict) -> Scene:
    if d.get("format_version") != SCENE_FORMAT_VERSION:
        raise ValueError(f"unsupported scene format: {d.get('format_version')}")
    params = WorldParams.from_dict(d["world_params"])
    shape = tuple(d["grid_shape"])
    grid = _rle_decode(d["grid_rle"], shape[0] * shape[1]).reshape(shape).astype(np.uint8)
    floor = _rle_decode(d["floor_class_rle"], shape[0] * shape[1]).reshape(shape).astype(np.int16)
    wall_face_class = np.full(shape + (4,), -1, dtype=np.int16)
    for r, c, f, cls in d["wall_faces"]:
        wall_face_class[r, c, f] = cls
    return Scene(
        grid=grid,
        floor_class=floor,
        wall_face_class=wall_face_class,
        appearance=np.asarray(d["appearance"], dtype=np.float64),
        seed=d["seed"],
        id=d["id"],
        params=params,
    )


def save_scene(scene: Scene, path):
    with open(path, "w") as fh:
        json.dump(scene_to_dict(scene), fh, separators=(",", ":"), sort_keys=True)


def load_scene(path) -> Scene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))
