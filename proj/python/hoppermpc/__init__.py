"""Geometric hybrid MPC stack for a 3D hopping robot.

Thin Python surface over the C++ core: quaternion/Lie-algebra helpers, the
hybrid dynamics and simulator, the QP and MPC layers, and the scenario runner.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
