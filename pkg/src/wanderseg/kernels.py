"""Kernel backend selection.

The compiled extension is used when it is importable; set
``WANDERSEG_PURE_PYTHON=1`` to force the pure-Python fallback. Both
backends implement identical contracts (see ``_kernels_py``).
"""

import os

from . import _kernels_py

if os.environ.get("WANDERSEG_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND

FREE = _kernels_py.FREE
WALL = _kernels_py.WALL
FACE_N = _kernels_py.FACE_N
FACE_E = _kernels_py.FACE_E
FACE_S = _kernels_py.FACE_S
FACE_W = _kernels_py.FACE_W

raycast = _impl.raycast
accumulate_votes = _impl.accumulate_votes
bfs_grid = _impl.bfs_grid
