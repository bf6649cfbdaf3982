"""Runge-Kutta quadrature for low-rank gramian factors.

The time-dependent gramian ``P(t)`` and the impulse response ``h(t)``
solve the coupled ODEs ``P' = h h^T, h' = A h``. One step of an ``s``-stage
method with step size ``omega`` solves

    H = [h, ..., h] + omega * A @ H @ Lambda^T

for the stage matrix ``H`` (``n x s``) and then updates

    Z <- [Z, H diag(omega * beta_tilde)^(1/2)]
    h <- h + omega * A @ H @ beta
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from rkmor.exceptions import EigConditionViolated, OracleTooLarge, SingularShiftedOperator
from rkmor.shifted import ShiftedSolver, matrix_key
from rkmor.system import EIG_CAP, GramianKind
from rkmor.tableau import _check_steps, eig_condition_violations

#: dense cap on n*s for the Kronecker-vectorized stage solve
KRON_STAGE_CAP = 2000


@dataclass(frozen=True, eq=False)
class LowRankFactor:
    """``Z`` with ``Z Z^H`` approximating a gramian.

    ``shifts`` records the eigenvalues ``omega_j mu_p`` of every stage that
    went into the run (zero for explicit stages), which is what decides the
    rational Krylov space spanned by ``Z``.
    """

    z: np.ndarray
    kind: GramianKind = GramianKind.CONTROLLABILITY
    shifts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    @property
    def k(self):
        return self.z.shape[1]

    @property
    def n(self):
        return self.z.shape[0]

    def gramian(self):
        return self.z @ self.z.conj().T

    def appended(self, cols, shifts):
        return LowRankFactor(np.hstack([self.z, cols]), self.kind,
                             np.concatenate([self.shifts, np.asarray(shifts, dtype=complex)]))

    @classmethod
    def empty(cls, n, kind=GramianKind.CONTROLLABILITY):
        return cls(np.zeros((n, 0), dtype=complex), GramianKind.parse(kind))


@dataclass(frozen=True, eq=False)
class QuadratureState:
    h: np.ndarray
    z: LowRankFactor
    step_index: int = 0

    @classmethod
    def initial(cls, rhs, kind=GramianKind.CONTROLLABILITY):
        rhs = np.asarray(rhs, dtype=complex).ravel()
        return cls(rhs.copy(), LowRankFactor.empty(rhs.shape[0], kind), 0)


def stage_solve_schur(a, h, tableau, omega, solver=None, akey=None):
    """Stage matrix ``H`` via the Schur form of ``Lambda^T``.

    With ``Lambda^T = Q T Q^H`` and ``H = H' Q^H`` the stages decouple into
    ``s`` triangular-coupled solves with ``I - omega T_ii A``.
    """
    solver = solver or ShiftedSolver()
    akey = akey or matrix_key(a)
    t, q = tableau.schur
    alpha = q.sum(axis=0)
    h = np.asarray(h, dtype=complex)
    s = tableau.s
    hp = np.empty((h.shape[0], s), dtype=complex)
    ahp = np.empty_like(hp)
    for i in range(s):
        rhs = alpha[i] * h
        if i:
            coupling = ahp[:, :i] @ t[:i, i]
            rhs = rhs + omega * coupling
        try:
            hp[:, i] = solver.solve(a, omega * t[i, i], rhs, akey=akey)
        except SingularShiftedOperator as exc:
            raise SingularShiftedOperator(exc.shift, stage=i) from exc
        ahp[:, i] = a @ hp[:, i]
    return hp @ q.conj().T


def stage_solve_kron(a, h, tableau, omega, cap=KRON_STAGE_CAP):
    """Stage matrix ``H`` from the ``ns x ns`` vectorized system.

    ``(I - omega (Lambda kron A)) vec(H) = 1_s kron h`` with column-major
    ``vec``. Dense; meant as a reference for :func:`stage_solve_schur`.
    """
    n = a.shape[0]
    s = tableau.s
    if n * s > cap:
        raise OracleTooLarge(f"n*s = {n * s} exceeds the dense cap {cap}")
    ad = a.toarray() if sp.issparse(a) else np.asarray(a)
    m = np.eye(n * s) - omega * np.kron(tableau.lam, ad)
    rhs = np.kron(np.ones(s), np.asarray(h, dtype=complex))
    return np.linalg.solve(m, rhs).reshape((n, s), order="F")


def quadrature_step(a, state, tableau, omega, solver=None, keep_zero_weight=False,
                    akey=None, stage_solve=None):
    """Advance ``state`` by one step of size ``omega``."""
    if not omega > 0:
        raise ValueError("step size must be positive")
    if stage_solve is None:
        hs = stage_solve_schur(a, state.h, tableau, omega, solver=solver, akey=akey)
    else:
        hs = stage_solve(a, state.h, tableau, omega)
    weights = omega * tableau.beta_tilde
    keep = np.ones(tableau.s, dtype=bool) if keep_zero_weight else weights > 0
    cols = hs[:, keep] * np.sqrt(weights[keep])
    z = state.z.appended(cols, omega * tableau.eigenvalues)
    h = state.h + omega * (a @ (hs @ tableau.beta))
    return QuadratureState(h, z, state.step_index + 1)


def run_quadrature(sys, kind, tableau, steps, solver=None, keep_zero_weight=False,
                   check=True, callback=None):
    """Low-rank factor of the controllability or observability gramian.

    Parameters
    ----------
    sys
        The :class:`~rkmor.system.LtiSystem`.
    kind
        ``GramianKind`` (or its name); observability runs on ``A^T, C^T``.
    tableau
        A :class:`~rkmor.tableau.ButcherTableau`.
    steps
        Positive step sizes ``omega_1, ..., omega_N``.
    keep_zero_weight
        Keep columns whose weight ``beta_tilde_i`` is zero. They do not
        change ``Z Z^H``; by default they are dropped.
    check
        Verify the eigenvalue condition first (dense eigenvalues of ``A``,
        skipped above the eigenvalue cap).
    callback
        Called as ``callback(state)`` after every step.

    Returns
    -------
    LowRankFactor
    """
    kind = GramianKind.parse(kind)
    steps = _check_steps(steps)
    a, rhs = sys.for_kind(kind)
    if check and len(steps) and sys.n <= EIG_CAP:
        bad = eig_condition_violations(tableau, sys.eigenvalues(), steps)
        if bad:
            raise EigConditionViolated(bad)
    solver = solver or ShiftedSolver()
    akey = matrix_key(a)
    state = QuadratureState.initial(rhs, kind)
    for w in steps:
        state = quadrature_step(a, state, tableau, w, solver=solver,
                                keep_zero_weight=keep_zero_weight, akey=akey)
        if callback is not None:
            callback(state)
    return state.z


def log_schedule(n_steps=20, omega_min=1e-2, omega_max=1e2, spacing="log"):
    """Step sizes spread over ``[omega_min, omega_max]``."""
    if n_steps < 0:
        raise ValueError("number of steps must be nonnegative")
    if spacing == "log":
        return np.logspace(np.log10(omega_min), np.log10(omega_max), n_steps)
    if spacing == "linear":
        return np.linspace(omega_min, omega_max, n_steps)
    raise ValueError(f"unknown spacing {spacing!r}")
