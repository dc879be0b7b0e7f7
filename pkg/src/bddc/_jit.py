"""Numba switch for the hot kernels.

Set ``BDDC_DISABLE_NUMBA=1`` before import to run every kernel as plain
Python/numpy. Both paths share the same kernel source, so results agree
bit for bit on the loop kernels; the vectorised numpy fallbacks used for
spmv and transpose agree to round-off.
"""
import os


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(f):
        return f

    return wrap


def _want_numba():
    flag = os.environ.get("BDDC_DISABLE_NUMBA", "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _want_numba()

if USE_NUMBA:
    import numba

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        if len(args) == 1 and callable(args[0]):
            return numba.njit(**kwargs)(args[0])
        return numba.njit(*args, **kwargs)

else:
    njit = _noop_jit

__all__ = ["USE_NUMBA", "njit"]
