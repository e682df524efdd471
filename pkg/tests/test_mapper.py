import numpy as np
import pytest

from wanderseg import kernels
from wanderseg.mapper import NAVIGABLE, OBSTACLE, UNKNOWN, OccupancyMap
from wanderseg.world import FREE, WALL, Observation, Pose, render_view, step, Action

from conftest import box_scene, small_params


def single_ray_obs(pose, depth_cells, hit, face=kernels.FACE_W, cell_size=0.5):
    """Hand-built one-ray observation travelling east."""
    return Observation(
        image=np.zeros((1, 4)),
        depth=np.array([depth_cells * cell_size]),
        gt_mask=np.array([1], dtype=np.int16),
        pose=pose,
        ray_headings=np.array([0.0]),
        dir_x=np.array([1.0]),
        dir_y=np.array([0.0]),
        hit_row=np.array([hit[0]], dtype=np.int32),
        hit_col=np.array([hit[1]], dtype=np.int32),
        hit_face=np.array([face], dtype=np.int8),
        clamped=np.array([False]),
        surf_x=np.array([hit[1] + 0.0]),
        surf_y=np.array([hit[0] + 0.5]),
        pos_x=pose.col + 0.5,
        pos_y=pose.row + 0.5,
    )


class TestUpdate:
    def test_single_ray_votes(self):
        occ = OccupancyMap(3, 8, cell_size=0.5)
        # wall at (1, 4): center-to-center depth 3 cells
        obs = single_ray_obs(Pose(1, 1, 0), depth_cells=3.0, hit=(1, 4))
        occ.update(obs)
        assert occ.state[1, 1] == NAVIGABLE
        assert occ.state[1, 2] == NAVIGABLE
        assert occ.state[1, 3] == NAVIGABLE
        assert occ.state[1, 4] == OBSTACLE
        assert int(np.sum(occ.state != UNKNOWN)) == 4
        assert occ.total_votes() == 4  # floor(3.0) + 1

    def test_tie_votes_to_obstacle(self):
        occ = OccupancyMap(2, 2, cell_size=0.5)
        occ.nav_votes[0, 0] = 2
        occ.obs_votes[0, 0] = 2
        assert occ._derive_state()[0, 0] == OBSTACLE

    def test_exhaustive_observation_matches_grid(self):
        scene = box_scene(rows=7, cols=7)
        occ = OccupancyMap.for_scene(scene)
        for r, c in scene.free_cells():
            for h in range(scene.params.n_headings):
                occ.update(render_view(scene, Pose(r, c, h)))
        voted = (occ.nav_votes + occ.obs_votes) > 0
        want = np.where(scene.grid == FREE, NAVIGABLE, OBSTACLE)
        np.testing.assert_array_equal(occ.state[voted], want[voted])
        # everything except the four never-hit corner cells is observed
        assert int(np.sum(~voted)) == 4

    def test_vote_count_exact(self):
        params = small_params()
        from wanderseg.world import generate_scene, sample_start_pose
        scene = generate_scene(params, 2)
        occ = OccupancyMap.for_scene(scene)
        rng = np.random.default_rng(0)
        cells = scene.free_cells()
        expected = 0
        for _ in range(20):
            r, c = cells[rng.integers(len(cells))]
            obs = render_view(scene, Pose(r, c, int(rng.integers(12))))
            occ.update(obs)
            expected += int(np.sum(np.floor(obs.depth / scene.cell_size)) + len(obs.depth))
        assert occ.total_votes() == expected

    def test_idempotent_derived_state(self):
        scene = box_scene()
        occ = OccupancyMap.for_scene(scene)
        obs = render_view(scene, Pose(3, 3, 0))
        occ.update(obs)
        state = occ.state.copy()
        rev = occ.revision
        occ.update(obs)
        np.testing.assert_array_equal(occ.state, state)
        assert occ.revision == rev

    def test_out_of_bounds_pose_rejected(self):
        scene = box_scene(rows=10, cols=10)
        obs = render_view(scene, Pose(8, 8, 0))
        occ = OccupancyMap(4, 4, cell_size=0.5)
        with pytest.raises(ValueError):
            occ.update(obs)

    def test_monotone_knowledge_and_area(self):
        params = small_params()
        from wanderseg.world import generate_scene, sample_start_pose
        scene = generate_scene(params, 5)
        occ = OccupancyMap.for_scene(scene)
        rng = np.random.default_rng(1)
        pose = sample_start_pose(scene)
        known_prev = np.zeros(occ.shape, dtype=bool)
        area_prev = 0.0
        for _ in range(120):
            pose = step(scene, pose, Action(int(rng.integers(3))))
            occ.update(render_view(scene, pose))
            known = occ.state != UNKNOWN
            assert np.all(known[known_prev])  # no cell returns to Unknown
            assert occ.explored_area() >= area_prev - 1e-12
            known_prev = known
            area_prev = occ.explored_area()
        # soundness: no observed cell contradicts the scene
        voted = (occ.nav_votes + occ.obs_votes) > 0
        want = np.where(scene.grid == FREE, NAVIGABLE, OBSTACLE)
        np.testing.assert_array_equal(occ.state[voted], want[voted])


class TestArea:
    def test_fresh_map_zero(self):
        assert OccupancyMap(5, 5, 0.5).explored_area() == 0.0

    def test_arithmetic(self):
        occ = OccupancyMap(5, 5, cell_size=0.5)
        occ.nav_votes[0, :5] = 1
        occ.state = occ._derive_state()
        assert occ.explored_area() == pytest.approx(1.25)

    def test_full_exploration_covers_visible(self):
        scene = box_scene(rows=9, cols=9)
        occ = OccupancyMap.for_scene(scene)
        for r, c in scene.free_cells():
            for h in range(scene.params.n_headings):
                occ.update(render_view(scene, Pose(r, c, h)))
        from wanderseg.world import total_navigable_area
        assert occ.explored_area() == pytest.approx(total_navigable_area(scene))


def test_ascii_dump():
    occ = OccupancyMap(2, 3, cell_size=0.5)
    occ.nav_votes[0, 0] = 1
    occ.obs_votes[1, 2] = 1
    occ.state = occ._derive_state()
    assert occ.to_ascii() == ".??\n??#"
