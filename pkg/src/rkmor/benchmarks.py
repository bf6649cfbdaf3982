"""Deterministic test systems."""

import re

import numpy as np
import scipy.sparse as sp

from rkmor.system import LtiSystem

BUNDLED_SIZES = (20, 100, 400)


def diagonal_system(n):
    """``A = -diag(logspace(0, 4, n))`` with ``B = C^T = 1``.

    The gramians are known in closed form, ``P_ij = 1 / (|l_i| + |l_j|)``.
    """
    lam = -np.logspace(0.0, 4.0, n)
    return LtiSystem(np.diag(lam), np.ones(n), np.ones(n))


def diagonal_gramian(n):
    lam = -np.logspace(0.0, 4.0, n)
    return -1.0 / np.add.outer(lam, lam)


def diffusion_system(n):
    """Heat equation on (0, 1), Dirichlet ends, central differences.

    Input: a Gaussian heat source around x = 0.25. Output: mean temperature
    over [0.6, 0.9]. ``A`` is stored as a sparse tridiagonal matrix.
    """
    dx = 1.0 / (n + 1)
    x = dx * np.arange(1, n + 1)
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    a = sp.diags([off, main, off], [-1, 0, 1], format="csr") / dx**2
    b = np.exp(-(((x - 0.25) / 0.1) ** 2))
    window = (x >= 0.6) & (x <= 0.9)
    c = window / max(window.sum(), 1)
    return LtiSystem(a, b, c.astype(float))


def random_stable_system(n, seed=None, rng=None):
    """Random dense system whose symmetric part of ``A`` is negative definite."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    k = rng.standard_normal((n, n))
    a = 0.5 * (k - k.T) - (m @ m.T / n + 0.5 * np.eye(n))
    return LtiSystem(a, rng.standard_normal(n), rng.standard_normal(n))


def bundled(name):
    """Look up a bundled system by name, e.g. ``"diffusion100"`` or ``"diagonal20"``."""
    m = re.fullmatch(r"(diagonal|diffusion)[_-]?(\d+)", str(name).strip().lower())
    if not m or int(m.group(2)) not in BUNDLED_SIZES:
        known = ", ".join(f"{k}{n}" for k in ("diagonal", "diffusion") for n in BUNDLED_SIZES)
        raise KeyError(f"unknown bundled system {name!r}; known: {known}")
    kind, n = m.group(1), int(m.group(2))
    return diagonal_system(n) if kind == "diagonal" else diffusion_system(n)
