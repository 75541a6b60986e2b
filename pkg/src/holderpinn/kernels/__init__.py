"""Backend dispatch for the hot numeric kernels.

The inner loops of a training step (tanh jet propagation, batched network
evaluation at neighbor points, the Adam update) exist in two interchangeable
implementations: a numba-compiled one and a pure-numpy fallback.  Selection:

    HOLDERPINN_KERNELS=numba   require the numba backend (error if missing)
    HOLDERPINN_KERNELS=numpy   force the numpy fallback
    unset or "auto"            numba when importable, numpy otherwise

``use()`` switches backends at runtime (tests and the benchmark script do
this); everything else should call ``get()`` and treat the result as a
namespace of kernel functions.
"""

import os
from importlib import import_module

_BACKENDS = ("numba", "numpy")
_loaded = {}
_active = None


def load(name):
    """Import a backend module by name without activating it.

    Parity tests and the benchmark script compare backends side by side;
    they should not change which backend the rest of the process computes
    with.
    """
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; choose from {_BACKENDS}")
    if name not in _loaded:
        _loaded[name] = import_module(f".{name}_backend", __package__)
    return _loaded[name]


def default_name():
    """Backend name the environment selects, ignoring use() overrides."""
    pref = os.environ.get("HOLDERPINN_KERNELS", "auto").lower()
    if pref != "auto":
        if pref not in _BACKENDS:
            raise ValueError(
                f"unknown kernel backend {pref!r}; choose from {_BACKENDS}")
        return pref
    try:
        load("numba")
    except ImportError:
        return "numpy"
    return "numba"


def use(name):
    """Select the kernel backend by name ("numba" or "numpy")."""
    global _active
    _active = load(name)
    return _active


def get():
    """Return the active backend module, resolving the default on first use."""
    global _active
    if _active is None:
        _active = load(default_name())
    return _active


def backend_name():
    return get().NAME


def available():
    """Names of backends that import cleanly on this machine."""
    out = []
    for name in _BACKENDS:
        try:
            load(name)
        except ImportError:
            continue
        out.append(name)
    return out
