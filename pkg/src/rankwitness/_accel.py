"""Backend selection for the numeric kernels.

Set ``RANKWITNESS_DISABLE_NUMBA=1`` to skip importing numba altogether and
run the pure-numpy kernels. Otherwise numba is used when importable. The
backend can also be switched at runtime (tests and the benchmark do this).
"""
from __future__ import annotations

import contextlib
import os

_FALSY = ("", "0", "false", "no")

NUMBA_DISABLED = os.environ.get("RANKWITNESS_DISABLE_NUMBA", "").strip().lower() not in _FALSY

HAVE_NUMBA = False
if not NUMBA_DISABLED:
    try:
        import numba
        from numba.extending import register_jitable
        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is an optional speedup
        pass

if HAVE_NUMBA:
    njit = numba.njit(cache=True)
    jitable = register_jitable
else:
    def njit(func):
        return func

    def jitable(func):
        return func

_backend = "numba" if HAVE_NUMBA else "numpy"


def backend() -> str:
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend unavailable (not installed or disabled by env)")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
