# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_kernels_py``. Same contracts, same arithmetic order."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, floor, INFINITY

cnp.import_array()

BACKEND = "cython"

FREE = 0
WALL = 1

FACE_N = 0
FACE_E = 1
FACE_S = 2
FACE_W = 3


def raycast(const unsigned char[:, ::1] grid, double pos_x, double pos_y,
            const double[::1] angles):
    cdef Py_ssize_t n = angles.shape[0]
    t_enter_arr = np.empty(n, dtype=np.float64)
    hit_row_arr = np.empty(n, dtype=np.int32)
    hit_col_arr = np.empty(n, dtype=np.int32)
    hit_face_arr = np.empty(n, dtype=np.int8)
    cdef double[::1] t_enter = t_enter_arr
    cdef int[::1] hit_row = hit_row_arr
    cdef int[::1] hit_col = hit_col_arr
    cdef signed char[::1] hit_face = hit_face_arr

    cdef Py_ssize_t i
    cdef double dx, dy, t, t_max_x, t_max_y, t_delta_x, t_delta_y
    cdef long col, row
    cdef int step_x, step_y
    cdef signed char face

    for i in range(n):
        dx = cos(angles[i])
        dy = sin(angles[i])
        col = <long>floor(pos_x)
        row = <long>floor(pos_y)

        if dx > 0.0:
            step_x = 1
            t_max_x = (col + 1.0 - pos_x) / dx
            t_delta_x = 1.0 / dx
        elif dx < 0.0:
            step_x = -1
            t_max_x = (col - pos_x) / dx
            t_delta_x = -1.0 / dx
        else:
            step_x = 0
            t_max_x = INFINITY
            t_delta_x = INFINITY
        if dy > 0.0:
            step_y = 1
            t_max_y = (row + 1.0 - pos_y) / dy
            t_delta_y = 1.0 / dy
        elif dy < 0.0:
            step_y = -1
            t_max_y = (row - pos_y) / dy
            t_delta_y = -1.0 / dy
        else:
            step_y = 0
            t_max_y = INFINITY
            t_delta_y = INFINITY

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
                hit_row[i] = <int>row
                hit_col[i] = <int>col
                hit_face[i] = face
                break

    return t_enter_arr, hit_row_arr, hit_col_arr, hit_face_arr


def accumulate_votes(long[:, ::1] nav_votes, long[:, ::1] obs_votes,
                     double pos_x, double pos_y,
                     const double[::1] dir_x, const double[::1] dir_y,
                     const double[::1] depth_cells,
                     const int[::1] hit_row, const int[::1] hit_col,
                     const unsigned char[::1] clamped,
                     const double[::1] surf_x, const double[::1] surf_y):
    cdef Py_ssize_t n = depth_cells.shape[0]
    cdef Py_ssize_t i
    cdef long k, nsamp, cx, cy
    for i in range(n):
        nsamp = <long>floor(depth_cells[i])
        for k in range(nsamp):
            cx = <long>floor(pos_x + k * dir_x[i])
            cy = <long>floor(pos_y + k * dir_y[i])
            nav_votes[cy, cx] += 1
        if clamped[i]:
            cx = <long>floor(surf_x[i])
            cy = <long>floor(surf_y[i])
            nav_votes[cy, cx] += 1
        else:
            obs_votes[hit_row[i], hit_col[i]] += 1


def bfs_grid(const unsigned char[:, ::1] passable, int start_r, int start_c):
    cdef Py_ssize_t h = passable.shape[0]
    cdef Py_ssize_t w = passable.shape[1]
    dist_arr = np.full((h, w), -1, dtype=np.int32)
    cdef int[:, ::1] dist = dist_arr
    queue_arr = np.empty(h * w, dtype=np.int64)
    cdef long[::1] queue = queue_arr

    cdef Py_ssize_t head = 0, tail = 0
    cdef long r, c, idx
    cdef int d
    dist[start_r, start_c] = 0
    queue[tail] = start_r * w + start_c
    tail += 1
    while head < tail:
        idx = queue[head]
        head += 1
        r = idx // w
        c = idx % w
        d = dist[r, c] + 1
        if r > 0 and passable[r - 1, c] and dist[r - 1, c] < 0:
            dist[r - 1, c] = d
            queue[tail] = (r - 1) * w + c
            tail += 1
        if c + 1 < w and passable[r, c + 1] and dist[r, c + 1] < 0:
            dist[r, c + 1] = d
            queue[tail] = r * w + c + 1
            tail += 1
        if r + 1 < h and passable[r + 1, c] and dist[r + 1, c] < 0:
            dist[r + 1, c] = d
            queue[tail] = (r + 1) * w + c
            tail += 1
        if c > 0 and passable[r, c - 1] and dist[r, c - 1] < 0:
            dist[r, c - 1] = d
            queue[tail] = r * w + c - 1
            tail += 1
    return dist_arr
