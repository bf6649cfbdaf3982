"""Approximate balancing from low-rank factors, and exact balanced truncation."""

import logging
import re
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from rkmor.exceptions import EmptyFactor, RankDeficient, UnpairedShifts
from rkmor.quadrature import LowRankFactor
from rkmor.system import GramianKind, ReducedSystem, solve_lyapunov_dense

logger = logging.getLogger(__name__)

#: singular values at or below this fraction of the largest count as zero
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class Truncation:
    """How many singular values of ``Z_o^H Z_c`` to keep.

    ``full`` keeps all of them and demands full rank. ``threshold`` drops
    ``sigma_i <= value * sigma_1``; ``order`` keeps the ``value`` largest.
    Only ``full`` carries the interpolation guarantee.
    """

    mode: str = "full"
    value: float = None

    def __post_init__(self):
        if self.mode not in ("full", "threshold", "order"):
            raise ValueError(f"unknown truncation mode {self.mode!r}")
        if self.mode == "threshold" and not (self.value is not None and self.value > 0):
            raise ValueError("threshold truncation needs a positive tolerance")
        if self.mode == "order" and not (self.value is not None and int(self.value) >= 1):
            raise ValueError("fixed-order truncation needs r >= 1")

    @classmethod
    def parse(cls, value):
        """Accept ``None``, a Truncation, ``"full"``, ``"threshold:1e-4"``, ``"order:5"``."""
        if value is None:
            return cls()
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, np.integer)):
            return cls("order", int(value))
        text = str(value).strip().lower()
        if text in ("full", "fullrank", "full_rank"):
            return cls()
        m = re.fullmatch(r"(threshold|order)[:=](.+)", text)
        if not m:
            raise ValueError(f"cannot parse truncation {value!r}")
        mode, arg = m.groups()
        return cls(mode, int(arg) if mode == "order" else float(arg))

    @property
    def guaranteed(self):
        return self.mode == "full"

    def __str__(self):
        return self.mode if self.mode == "full" else f"{self.mode}:{self.value:g}"


@dataclass(frozen=True, eq=False)
class BalancingResult:
    reduced: ReducedSystem
    v: np.ndarray
    w: np.ndarray
    sigma: np.ndarray
    truncation: Truncation = field(default_factory=Truncation)
    realified: bool = False
    system: object = field(default=None, repr=False)
    shifts_c: np.ndarray = field(default=None, repr=False)
    shifts_o: np.ndarray = field(default=None, repr=False)

    @property
    def r(self):
        return self.v.shape[1]

    @property
    def within_guarantees(self):
        """False for truncated projections, where no interpolation result applies."""
        return self.truncation.guaranteed

    def biorthogonality_error(self):
        return float(np.linalg.norm(self.w.conj().T @ self.v - np.eye(self.r)))


def project(sys, v, w):
    """Petrov-Galerkin projection ``(W^H A V, W^H B, C V)``."""
    wh = w.conj().T
    return ReducedSystem(wh @ (sys.a @ v), wh @ sys.b, sys.c @ v)


def _select_rank(sigma, truncation, expected):
    if sigma.size == 0 or sigma[0] <= 0:
        raise RankDeficient(0, expected, sigma)
    numerical = int(np.count_nonzero(sigma > RANK_RTOL * sigma[0]))
    if truncation.mode == "full":
        if numerical < expected:
            raise RankDeficient(numerical, expected, sigma)
        return expected
    if truncation.mode == "threshold":
        r = int(np.count_nonzero(sigma > truncation.value * sigma[0]))
    else:
        r = min(int(truncation.value), numerical)
    warnings.warn(f"truncated projection ({truncation}): outside the interpolation guarantees",
                  RuntimeWarning, stacklevel=3)
    return max(r, 1)


def approximate_balance(sys, z_c, z_o, truncation=None):
    """Approximate balancing transformation from two low-rank factors.

    Computes the compact SVD ``Z_o^H Z_c = U Sigma T^H`` and projects with
    ``V = Z_c T Sigma^(-1/2)``, ``W = Z_o U Sigma^(-1/2)`` so that
    ``W^H V = I``.

    Raises
    ------
    EmptyFactor
        If either factor has no columns.
    RankDeficient
        Under full-rank mode, if ``Z_o^H Z_c`` is numerically rank deficient.
    """
    truncation = Truncation.parse(truncation)
    zc = z_c.z if isinstance(z_c, LowRankFactor) else np.asarray(z_c)
    zo = z_o.z if isinstance(z_o, LowRankFactor) else np.asarray(z_o)
    if zc.shape[1] == 0 or zo.shape[1] == 0:
        raise EmptyFactor("both gramian factors need at least one column")
    u, sigma, th = np.linalg.svd(zo.conj().T @ zc, full_matrices=False)
    r = _select_rank(sigma, truncation, min(zc.shape[1], zo.shape[1]))
    scale = 1.0 / np.sqrt(sigma[:r])
    v = zc @ (th[:r].conj().T * scale)
    w = zo @ (u[:, :r] * scale)
    logger.debug("approximate balancing: r=%d, sigma_r/sigma_1=%.3e", r, sigma[r - 1] / sigma[0])
    return BalancingResult(
        project(sys, v, w), v, w, sigma[:r], truncation, False, sys,
        getattr(z_c, "shifts", None), getattr(z_o, "shifts", None))


def psd_sqrt_factor(p, rtol=1e-14):
    """``S`` with ``S S^T = p`` from a symmetric eigendecomposition.

    Eigenvalues below ``rtol * max`` are treated as zero, so numerically
    semidefinite matrices are accepted where a Cholesky factorization fails.
    """
    d, x = np.linalg.eigh(0.5 * (p + p.conj().T))
    top = d.max() if d.size else 0.0
    d = np.where(d > rtol * max(top, 0.0), d, 0.0)
    return x * np.sqrt(d)


def exact_balanced_truncation(sys, r):
    """Balanced truncation to order ``r`` from the dense gramians."""
    if not 1 <= r <= sys.n:
        raise ValueError(f"order must be in [1, {sys.n}], got {r}")
    p = solve_lyapunov_dense(sys, GramianKind.CONTROLLABILITY)
    q = solve_lyapunov_dense(sys, GramianKind.OBSERVABILITY)
    s = psd_sqrt_factor(p)
    rf = psd_sqrt_factor(q)
    u, sigma, th = np.linalg.svd(rf.T @ s)
    if sigma[0] <= 0 or sigma[r - 1] <= RANK_RTOL * sigma[0]:
        raise RankDeficient(int(np.count_nonzero(sigma > RANK_RTOL * max(sigma[0], 0))), r, sigma)
    scale = 1.0 / np.sqrt(sigma[:r])
    v = s @ (th[:r].T * scale)
    w = rf @ (u[:, :r] * scale)
    trunc = Truncation() if r == sys.n else Truncation("order", r)
    return BalancingResult(project(sys, v, w), v, w, sigma[:r], trunc, False, sys)


def _conjugate_closed(shifts, rtol=1e-10):
    pending = [complex(z) for z in np.asarray(shifts).ravel()
               if abs(complex(z).imag) > rtol * max(1.0, abs(complex(z)))]
    while pending:
        z = pending.pop()
        for i, y in enumerate(pending):
            if abs(y - z.conjugate()) <= rtol * max(1.0, abs(z)):
                del pending[i]
                break
        else:
            return False
    return True


def _real_basis(x, r, what):
    """Orthonormal real basis of ``span(x)`` if that span is conjugation invariant."""
    u, sv, _ = np.linalg.svd(np.hstack([x.real, x.imag]), full_matrices=False)
    if sv.size > r and sv[r] > 1e-8 * sv[0]:
        raise UnpairedShifts(f"span of {what} is not closed under conjugation")
    return u[:, :r]


def realify(result):
    """Replace ``V, W`` by real bases of the same spans.

    The projector ``V W^H`` is unchanged, hence so is the reduced transfer
    function; the reduced matrices become real.
    """
    if result.system is None:
        raise ValueError("result carries no system to project")
    for shifts, side in ((result.shifts_c, "Z_c"), (result.shifts_o, "Z_o")):
        if shifts is not None and not _conjugate_closed(shifts):
            raise UnpairedShifts(f"shifts of {side} do not occur in conjugate pairs")
    r = result.r
    vr = _real_basis(result.v, r, "V")
    wr0 = _real_basis(result.w, r, "W")
    # rescale W so that W^T V = I
    wr = np.linalg.solve((vr.T @ wr0).T, wr0.T).T
    return replace(result, reduced=project(result.system, vr, wr), v=vr, w=wr, realified=True)
