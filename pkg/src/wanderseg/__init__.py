"""wanderseg: a desk-scale embodied active-learning testbed.

Agents explore procedurally generated 2-D buildings with frontier
exploration over an online occupancy map, request ground-truth
annotations for their current view, and refine a per-pixel segmentation
model on the fly. Heuristic annotation baselines and a PPO-trained agent
are evaluated episodically or lifelong across scene sequences.
"""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
