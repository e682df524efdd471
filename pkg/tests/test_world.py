import dataclasses
import json
import math

import numpy as np
import pytest

from wanderseg import kernels
from wanderseg.world import (
    FREE,
    WALL,
    Action,
    Pose,
    SceneGenerationError,
    WorldParams,
    forward_axis,
    generate_scene,
    heading_angle,
    make_prototypes,
    ray_offsets,
    render_view,
    sample_reference_views,
    sample_start_pose,
    save_scene,
    load_scene,
    scene_from_dict,
    scene_to_dict,
    step,
    total_navigable_area,
    wrap_angle,
)

from conftest import box_scene, flood_fill_free, small_params


# --------------------------------------------------------------------------
# independent raycast oracle: enumerate all grid-line crossings, sort by t
# (x-crossings first on ties), walk cells until the first wall


def raycast_oracle(grid, px, py, angle, t_max=1000.0):
    dx, dy = math.cos(angle), math.sin(angle)
    crossings = []
    if dx > 0:
        k = math.floor(px) + 1
        while (k - px) / dx <= t_max:
            crossings.append(((k - px) / dx, 0, 1))
            k += 1
    elif dx < 0:
        k = math.floor(px)
        while (k - px) / dx <= t_max:
            crossings.append(((k - px) / dx, 0, -1))
            k -= 1
    if dy > 0:
        k = math.floor(py) + 1
        while (k - py) / dy <= t_max:
            crossings.append(((k - py) / dy, 1, 1))
            k += 1
    elif dy < 0:
        k = math.floor(py)
        while (k - py) / dy <= t_max:
            crossings.append(((k - py) / dy, 1, -1))
            k -= 1
    crossings.sort(key=lambda c: (c[0], c[1]))  # ties: x-axis crossing first
    row, col = int(math.floor(py)), int(math.floor(px))
    for t, axis, sign in crossings:
        if axis == 0:
            col += sign
            face = kernels.FACE_W if sign > 0 else kernels.FACE_E
        else:
            row += sign
            face = kernels.FACE_N if sign > 0 else kernels.FACE_S
        if grid[row, col] == WALL:
            return t, row, col, face
    raise AssertionError("oracle ray escaped the grid")


class TestGenerate:
    def test_deterministic(self, params):
        a = generate_scene(params, 7)
        b = generate_scene(params, 7)
        assert json.dumps(scene_to_dict(a), sort_keys=True) == \
            json.dumps(scene_to_dict(b), sort_keys=True)

    def test_single_room_two_classes_is_rectangle(self):
        p = small_params(room_range=(1, 1), n_classes=2, top_k=2,
                         obstacle_density=0.0)
        scene = generate_scene(p, 5)
        interior = scene.grid[1:-1, 1:-1]
        assert np.all(interior == FREE)
        assert np.all(scene.grid[0, :] == WALL)
        assert np.all(scene.grid[-1, :] == WALL)
        assert np.all(scene.grid[:, 0] == WALL)
        assert np.all(scene.grid[:, -1] == WALL)

    def test_seeds_differ_and_connected(self, params):
        a = generate_scene(params, 1)
        b = generate_scene(params, 2)
        assert not np.array_equal(a.wall_face_class, b.wall_face_class)
        for scene in (a, b):
            free = {(r, c) for r, c in scene.free_cells()}
            assert flood_fill_free(scene.grid) == free

    def test_connectivity_many_seeds(self):
        p = small_params(rows=24, cols=24, room_range=(2, 4))
        for seed in range(10):
            scene = generate_scene(p, seed)
            free = {(r, c) for r, c in scene.free_cells()}
            assert flood_fill_free(scene.grid) == free

    def test_all_exposed_faces_classified(self, scene):
        rows, cols = scene.grid.shape
        for r in range(rows):
            for c in range(cols):
                if scene.grid[r, c] != WALL:
                    continue
                for face, (dr, dc) in (
                    (kernels.FACE_N, (-1, 0)), (kernels.FACE_E, (0, 1)),
                    (kernels.FACE_S, (1, 0)), (kernels.FACE_W, (0, -1)),
                ):
                    nr, nc = r + dr, c + dc
                    exposed = (0 <= nr < rows and 0 <= nc < cols
                               and scene.grid[nr, nc] == FREE)
                    cls = scene.wall_face_class[r, c, face]
                    if exposed:
                        assert 0 <= cls < scene.params.n_classes
                    else:
                        assert cls == -1

    def test_degenerate_prototype_request_raises(self):
        with pytest.raises(SceneGenerationError):
            make_prototypes(40, 2, min_dist=1.0)

    def test_bad_params_rejected(self):
        with pytest.raises(ValueError):
            WorldParams(n_classes=4, top_k=5)
        with pytest.raises(ValueError):
            WorldParams(sigma_pix=-0.1)
        with pytest.raises(ValueError):
            WorldParams(n_rays=4)


class TestRender:
    def test_facing_wall_single_surface(self):
        scene = box_scene(rows=8, cols=8, face_class=3)
        p = scene.params
        # wall directly east, one cell away
        pose = Pose(4, 6, 0)
        obs = render_view(scene, pose)
        assert np.all(obs.gt_mask == 3)
        cell = p.cell_size
        assert np.all(obs.depth >= cell * 0.999)
        assert np.all(obs.depth <= cell * 1.25)
        center = obs.depth[p.n_rays // 2]
        assert center == pytest.approx(cell, rel=1e-3)  # rays sit at pixel centers

    def test_noiseless_features_equal_prototypes(self):
        scene = box_scene()
        obs = render_view(scene, Pose(3, 3, 2))
        expected = scene.params.prototypes[obs.gt_mask]
        np.testing.assert_array_equal(obs.image, expected)

    def test_depth_matches_oracle(self, params):
        rng = np.random.default_rng(0)
        for seed in range(5):
            scene = generate_scene(params, seed)
            cells = scene.free_cells()
            for _ in range(10):
                r, c = cells[rng.integers(len(cells))]
                pose = Pose(r, c, int(rng.integers(params.n_headings)))
                obs = render_view(scene, pose)
                for i in range(params.n_rays):
                    t, hr, hc, face = raycast_oracle(
                        scene.grid, obs.pos_x, obs.pos_y, obs.ray_headings[i])
                    want = min(t + 0.5, params.max_range / params.cell_size)
                    assert obs.depth[i] == pytest.approx(
                        want * params.cell_size, rel=1e-9)
                    if not obs.clamped[i]:
                        assert (obs.hit_row[i], obs.hit_col[i], obs.hit_face[i]) == \
                            (hr, hc, face)

    def test_rerender_deterministic(self, scene):
        pose = sample_start_pose(scene)
        a = render_view(scene, pose)
        b = render_view(scene, pose)
        np.testing.assert_array_equal(a.image, b.image)
        np.testing.assert_array_equal(a.depth, b.depth)

    def test_depth_monotone_in_max_range(self, scene):
        pose = sample_start_pose(scene)
        obs_far = render_view(scene, pose)
        near_params = dataclasses.replace(scene.params, max_range=1.5)
        near_scene = dataclasses.replace(scene, params=near_params)
        obs_near = render_view(near_scene, pose)
        assert np.all(obs_near.depth <= obs_far.depth + 1e-12)
        assert np.all(obs_near.depth <= 1.5 + 1e-12)

    def test_clamped_rays_use_floor_class(self):
        p = small_params(rows=20, cols=20, room_range=(1, 1),
                         obstacle_density=0.0, max_range=1.0,
                         sigma_pix=0.0)
        scene = generate_scene(p, 11)
        pose = Pose(10, 10, 0)
        obs = render_view(scene, pose)
        assert np.all(obs.clamped)
        assert np.all(obs.depth == 1.0)
        for i in range(p.n_rays):
            fr = int(np.floor(obs.surf_y[i]))
            fc = int(np.floor(obs.surf_x[i]))
            assert obs.gt_mask[i] == scene.floor_class[fr, fc]

    def test_invariants(self, scene):
        pose = sample_start_pose(scene)
        obs = render_view(scene, pose)
        assert np.all(obs.depth > 0)
        assert np.all(obs.depth <= scene.params.max_range + 1e-12)
        assert np.all(np.isfinite(obs.image))
        assert np.all((obs.gt_mask >= 0) & (obs.gt_mask < scene.params.n_classes))

    def test_pose_off_free_rejected(self, scene):
        with pytest.raises(ValueError):
            render_view(scene, Pose(0, 0, 0))


class TestStep:
    def test_collision_is_noop(self):
        scene = box_scene()
        pose = Pose(1, 6, 0)  # facing the east wall from the edge
        assert step(scene, pose, Action.MOVE_FORWARD) == pose

    def test_full_turn_identity(self, scene):
        pose = sample_start_pose(scene)
        p = pose
        for _ in range(scene.params.n_headings):
            p = step(scene, p, Action.ROTATE_LEFT)
        assert p == pose

    def test_forward_advances_one_cell(self):
        scene = box_scene()
        pose = Pose(4, 2, 0)
        after = step(scene, pose, Action.MOVE_FORWARD)
        assert (after.row, after.col) == (4, 3)

    def test_annotate_keeps_pose(self, scene):
        pose = sample_start_pose(scene)
        assert step(scene, pose, Action.ANNOTATE) == pose

    def test_no_action_sequence_reaches_wall(self, scene):
        rng = np.random.default_rng(4)
        pose = sample_start_pose(scene)
        for _ in range(300):
            pose = step(scene, pose, Action(int(rng.integers(3))))
            assert scene.grid[pose.row, pose.col] == FREE

    def test_forward_axis_projection(self):
        # 12 headings at 30 degrees: nearest axis, E S W N
        assert forward_axis(0, 12) == (0, 1)
        assert forward_axis(1, 12) == (0, 1)   # 30 deg -> east
        assert forward_axis(2, 12) == (1, 0)   # 60 deg -> south
        assert forward_axis(3, 12) == (1, 0)
        assert forward_axis(6, 12) == (0, -1)  # 180 deg -> west
        assert forward_axis(9, 12) == (-1, 0)  # 270 deg -> north


class TestReferenceViews:
    def test_same_seed_same_set(self, scene):
        a = sample_reference_views(scene, 8, seed=20)
        b = sample_reference_views(scene, 8, seed=20)
        for x, y in zip(a, b):
            assert x.pose == y.pose
            np.testing.assert_array_equal(x.image, y.image)

    def test_single_cell_scene(self):
        scene = box_scene(rows=3, cols=3)
        views = sample_reference_views(scene, 4, seed=1)
        assert all(v.pose.row == 1 and v.pose.col == 1 for v in views)

    def test_cell_histogram_uniform(self):
        from scipy import stats
        scene = box_scene(rows=7, cols=7)
        cells = scene.free_cells()
        views = sample_reference_views(scene, 10_000, seed=2)
        counts = {c: 0 for c in cells}
        for v in views:
            counts[(v.pose.row, v.pose.col)] += 1
        observed = np.array([counts[c] for c in cells])
        chi2 = ((observed - observed.mean()) ** 2 / observed.mean()).sum()
        # fail only for wildly non-uniform draws
        assert chi2 < stats.chi2.ppf(0.9999, df=len(cells) - 1)


class TestArea:
    def test_rectangle_arithmetic(self):
        p = small_params(rows=12, cols=12, room_range=(1, 1),
                         obstacle_density=0.0)
        scene = generate_scene(p, 1)
        assert total_navigable_area(scene) == pytest.approx(100 * 0.25)

    def test_matches_flood_fill(self, params):
        for seed in range(5):
            scene = generate_scene(params, seed)
            count = len(flood_fill_free(scene.grid))
            assert total_navigable_area(scene) == pytest.approx(
                count * params.cell_size ** 2)


class TestSeparability:
    def test_prototype_readout_perfect_when_noiseless(self):
        p = small_params(sigma_pix=0.0, sigma_scene=0.0)
        scene = generate_scene(p, 9)
        protos = p.prototypes
        pose = sample_start_pose(scene)
        obs = render_view(scene, pose)
        pred = np.argmax(obs.image @ protos.T, axis=1)
        np.testing.assert_array_equal(pred, obs.gt_mask)

    def test_prototypes_distinct(self, params):
        d = np.linalg.norm(
            params.prototypes[:, None] - params.prototypes[None, :], axis=2)
        np.fill_diagonal(d, np.inf)
        assert d.min() >= 1.0


class TestSerialization:
    def test_round_trip(self, scene, tmp_path):
        path = tmp_path / "scene.json"
        save_scene(scene, path)
        back = load_scene(path)
        np.testing.assert_array_equal(back.grid, scene.grid)
        np.testing.assert_array_equal(back.floor_class, scene.floor_class)
        np.testing.assert_array_equal(back.wall_face_class, scene.wall_face_class)
        np.testing.assert_allclose(back.appearance, scene.appearance)
        np.testing.assert_allclose(back.params.prototypes, scene.params.prototypes)
        assert back.id == scene.id and back.seed == scene.seed

    def test_round_trip_byte_identical(self, scene, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_scene(scene, p1)
        save_scene(load_scene(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_version_check(self, scene):
        d = scene_to_dict(scene)
        d["format_version"] = 99
        with pytest.raises(ValueError):
            scene_from_dict(d)


def test_wrap_angle_range():
    for x in np.linspace(-12.0, 12.0, 400):
        w = wrap_angle(x)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.cos(w), math.cos(x), abs_tol=1e-12)
        assert math.isclose(math.sin(w), math.sin(x), abs_tol=1e-12)
