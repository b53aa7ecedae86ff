"""Black-box compression of rank-structured matrices.

Reconstructs H1, uniform-H1, and H2 representations of an operator from
matrix-vector products with structured random test matrices planned by
graph coloring.
"""

try:
    from hpeel._core import *  # noqa: F401,F403
    from hpeel import _core as core
except ImportError:  # build-tree layout: _core sits next to the package
    from _core import *  # noqa: F401,F403
    import _core as core

__all__ = [name for name in dir(core) if not name.startswith("_")]
