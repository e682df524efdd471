"""Timing comparison of the compiled kernels against the pure-Python
fallback on representative workloads (render-rate raycasts, map voting,
BFS distance fields)."""

import time

import numpy as np

from . import _kernels_py
from .mapper import OccupancyMap
from .world import WorldParams, generate_scene, render_view, sample_start_pose

try:
    from . import _kernels_cy
except ImportError:
    _kernels_cy = None


def _time(fn, repeats):
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def run_benchmark(rows=40, cols=40, repeats=200, seed=0):
    """Returns a list of (name, backend, seconds-per-call) tuples."""
    params = WorldParams(rows=rows, cols=cols)
    scene = generate_scene(params, seed)
    pose = sample_start_pose(scene)
    obs = render_view(scene, pose)
    occ = OccupancyMap.for_scene(scene)
    occ.update(obs)
    angles = obs.ray_headings
    px, py = obs.pos_x, obs.pos_y
    depth_cells = np.ascontiguousarray(obs.depth / scene.cell_size)
    clamped = np.ascontiguousarray(obs.clamped, dtype=np.uint8)
    free_mask = np.ascontiguousarray(scene.grid == 0, dtype=np.uint8)

    backends = [("python", _kernels_py)]
    if _kernels_cy is not None:
        backends.append(("cython", _kernels_cy))

    results = []
    for name, mod in backends:
        results.append((
            "raycast", name,
            _time(lambda: mod.raycast(scene.grid, px, py, angles), repeats),
        ))
        nav = np.zeros(occ.shape, dtype=np.int64)
        obs_votes = np.zeros(occ.shape, dtype=np.int64)
        results.append((
            "accumulate_votes", name,
            _time(lambda: mod.accumulate_votes(
                nav, obs_votes, px, py, obs.dir_x, obs.dir_y, depth_cells,
                obs.hit_row, obs.hit_col, clamped, obs.surf_x, obs.surf_y,
            ), repeats),
        ))
        results.append((
            "bfs_grid", name,
            _time(lambda: mod.bfs_grid(free_mask, pose.row, pose.col), repeats),
        ))
    return results


def format_results(results) -> str:
    lines = [f"{'kernel':<20} {'backend':<8} {'us/call':>10}"]
    by_kernel = {}
    for kernel, backend, secs in results:
        lines.append(f"{kernel:<20} {backend:<8} {secs * 1e6:>10.1f}")
        by_kernel.setdefault(kernel, {})[backend] = secs
    for kernel, t in by_kernel.items():
        if "python" in t and "cython" in t:
            lines.append(f"{kernel}: cython is {t['python'] / t['cython']:.1f}x faster")
    return "\n".join(lines)
