"""Python interface to the multiple-choice knowledge probe engine.

Everything lives in the compiled extension; this package just re-exports it.
When running from a build tree the extension sits next to the package on
PYTHONPATH instead of inside it.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
