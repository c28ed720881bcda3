"""Hot-loop kernels with a compiled core and a numpy fallback.

The compiled extension (Cython) accelerates the two sequential inner loops
that dominate runtime: the lumped-slider integration and the simplified
stress/aging stepping.  It is built for the default parametric laws; the
pure lane works for any laws and is selected automatically when the
extension is missing or the laws are custom callables.
"""

from . import pure

try:
    from . import _fast as fast

    HAVE_FAST = True
except ImportError:
    fast = None
    HAVE_FAST = False


def backend_name() -> str:
    return "compiled" if HAVE_FAST else "pure"


__all__ = ["pure", "fast", "HAVE_FAST", "backend_name"]
