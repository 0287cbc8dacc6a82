"""Manifold-aware adversarial data augmentation for domain transfer.

Thin wrapper around the compiled extension; see the project README for the
full CLI and file formats.
"""

try:
    from ._maada import *  # noqa: F401,F403
    from ._maada import __version__  # noqa: F401
except ImportError:  # extension built out-of-tree (development layout)
    from _maada import *  # noqa: F401,F403
    from _maada import __version__  # noqa: F401
