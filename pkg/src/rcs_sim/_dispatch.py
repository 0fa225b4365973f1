"""Kernel dispatch: JIT-compile the hot loops unless disabled by environment.

Setting ``RCS_SIM_NO_NUMBA=1`` (or if numba is not importable) runs the exact
same kernel source uncompiled on numpy scalars. Both paths produce
bit-identical results; the interpreted one is roughly two to three orders of
magnitude slower and exists for debugging and numba-free installs.
"""

import os
import warnings

DISABLE_ENV = "RCS_SIM_NO_NUMBA"


def _jit_enabled() -> bool:
    flag = os.environ.get(DISABLE_ENV, "").strip().lower()
    if flag not in ("", "0", "false", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _jit_enabled()

if NUMBA_ENABLED:
    from numba import njit as _numba_njit

    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        if func is None:
            return _numba_njit(**kwargs)
        return _numba_njit(**kwargs)(func)

else:
    # The interpreted RNG wraps uint64 on numpy scalars, which emits
    # RuntimeWarnings the compiled path never sees; wraparound is intended.
    warnings.filterwarnings(
        "ignore", message="overflow encountered", category=RuntimeWarning
    )

    def njit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func
