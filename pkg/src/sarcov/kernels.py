"""Backend selection for the hot kernels.

The compiled extension ``_ckernels`` is used when it was built; otherwise the
numpy fallback in ``_pykernels`` takes over. Set ``SARCOV_BACKEND=python`` to
force the fallback, or ``SARCOV_BACKEND=compiled`` to fail loudly when the
extension is missing.
"""

import contextlib
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def available():
    return sorted(_BACKENDS)


def get_backend(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ImportError(f"kernel backend {name!r} unavailable; have {available()}") from None


def _initial():
    choice = os.environ.get("SARCOV_BACKEND", "auto").lower()
    if choice == "auto":
        return "compiled" if _ckernels is not None else "python"
    get_backend(choice)
    return choice


_active_name = _initial()


def active():
    """The kernel module currently in use."""
    return _BACKENDS[_active_name]


def active_name():
    return _active_name


def set_backend(name):
    global _active_name
    get_backend(name)
    _active_name = name


@contextlib.contextmanager
def use(name):
    """Temporarily switch backends, e.g. for benchmarks and equivalence tests."""
    previous = _active_name
    set_backend(name)
    try:
        yield get_backend(name)
    finally:
        set_backend(previous)
