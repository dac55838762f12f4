"""Integrated density of states of random divergence-form operators."""

try:
    from ._idslab import *  # noqa: F401,F403
    from ._idslab import __doc__ as _core_doc  # noqa: F401
except ImportError:
    # development layout: the extension sits on sys.path instead of in the
    # package directory
    from _idslab import *  # noqa: F401,F403

__version__ = "0.1.0"
