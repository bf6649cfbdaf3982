"""Input coercion helpers shared by the estimators and the CLI."""

import numpy as np

from rkmor.system import LtiSystem
from rkmor.tableau import _check_steps


def check_system(system):
    """Coerce ``system`` to an :class:`LtiSystem`.

    Accepts an ``LtiSystem``, a tuple ``(A, B, C)`` or any object with
    ``A``/``B``/``C`` (or ``a``/``b``/``c``) attributes.
    """
    if isinstance(system, LtiSystem):
        return system
    if isinstance(system, (tuple, list)) and len(system) == 3:
        return LtiSystem(*system)
    for names in (("a", "b", "c"), ("A", "B", "C")):
        if all(hasattr(system, k) for k in names):
            return LtiSystem(*(getattr(system, k) for k in names))
    raise TypeError(f"cannot interpret {type(system).__name__} as an LTI system")


def check_steps(steps):
    """Positive finite step sizes as a float array."""
    if steps is None:
        raise ValueError("step sizes are required")
    return _check_steps(steps)


def check_points(s):
    """Evaluation points as a 1-D complex array plus a flag for scalar input."""
    arr = np.asarray(s, dtype=complex)
    return np.atleast_1d(arr).ravel(), arr.ndim == 0
