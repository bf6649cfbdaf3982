"""Continuous-time SISO LTI systems and their exact reference quantities."""

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spla
import scipy.sparse as sp
import scipy.sparse.linalg as spsla

from rkmor.exceptions import (DimensionMismatch, OracleTooLarge, SingularShift,
                              UnstableSystem)
from rkmor.shifted import Factorization, _Singular

#: largest n accepted by the dense Lyapunov oracle
ORACLE_CAP = 200
#: up to this n the oracle uses the Kronecker-vectorized system directly
KRON_CAP = 40
#: dense eigensolver cap for stability and eigenvalue-condition checks
EIG_CAP = 4000


class GramianKind(enum.Enum):
    CONTROLLABILITY = "controllability"
    OBSERVABILITY = "observability"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if member.value.startswith(key) and key:
                return member
        raise ValueError(f"unknown gramian kind {value!r}")


def _as_vector(x, n, what):
    arr = x.toarray() if sp.issparse(x) else np.asarray(x)
    if arr.ndim == 2:
        if what == "b" and arr.shape[1] != 1:
            raise DimensionMismatch(f"B must have exactly one column, got shape {arr.shape}")
        if what == "c" and arr.shape[0] != 1:
            raise DimensionMismatch(f"C must have exactly one row, got shape {arr.shape}")
        arr = arr.ravel()
    elif arr.ndim != 1:
        raise DimensionMismatch(f"{what.upper()} must be a vector, got ndim={arr.ndim}")
    if arr.shape[0] != n:
        raise DimensionMismatch(f"{what.upper()} has length {arr.shape[0]}, A is {n}x{n}")
    return arr


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """Stable SISO system ``x' = A x + B u, y = C x``.

    ``a`` may be a dense array or a scipy sparse matrix; ``b`` and ``c``
    are stored as dense 1-D arrays. Stability is not checked on
    construction, call :meth:`assert_stable`.
    """

    a: object
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = self.a
        if sp.issparse(a):
            a = sp.csr_matrix(a)
        else:
            a = np.asarray(a)
            if a.ndim == 0:
                a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"A must be square, got shape {a.shape}")
        n = a.shape[0]
        if n == 0:
            raise DimensionMismatch("empty system")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", _as_vector(self.b, n, "b"))
        object.__setattr__(self, "c", _as_vector(self.c, n, "c"))

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def is_sparse(self):
        return sp.issparse(self.a)

    def dense_a(self):
        return self.a.toarray() if self.is_sparse else self.a

    def matvec(self, x):
        return self.a @ x

    def dual(self):
        """The system ``(A^T, C^T, B^T)`` whose controllability gramian is Q."""
        return LtiSystem(self.a.T, self.c, self.b)

    def for_kind(self, kind):
        """Return ``(A, rhs)`` that drives the quadrature for ``kind``."""
        if GramianKind.parse(kind) is GramianKind.CONTROLLABILITY:
            return self.a, self.b
        return self.a.T, self.c

    def eigenvalues(self):
        if self.n > EIG_CAP:
            raise OracleTooLarge(f"dense eigenvalues refused for n={self.n} > {EIG_CAP}")
        return np.linalg.eigvals(self.dense_a())

    def assert_stable(self):
        """Raise :class:`UnstableSystem` unless every eigenvalue has Re < 0."""
        if self.n <= EIG_CAP:
            rmax = float(np.max(self.eigenvalues().real))
        else:
            lam = spsla.eigs(self.a, k=1, which="LR", return_eigenvectors=False)
            rmax = float(lam.real.max())
        if not rmax < 0:
            raise UnstableSystem(rmax)
        return self


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """Projected system ``(W^H A V, W^H B, C V)``, possibly complex."""

    a_hat: np.ndarray
    b_hat: np.ndarray
    c_hat: np.ndarray
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a_hat))
        r = a.shape[0]
        if a.shape != (r, r):
            raise DimensionMismatch(f"A_hat must be square, got {a.shape}")
        object.__setattr__(self, "a_hat", a)
        object.__setattr__(self, "b_hat", _as_vector(self.b_hat, r, "b"))
        object.__setattr__(self, "c_hat", _as_vector(self.c_hat, r, "c"))

    @property
    def r(self):
        return self.a_hat.shape[0]

    # uniform accessors so the evaluation helpers accept either type
    @property
    def a(self):
        return self.a_hat

    @property
    def b(self):
        return self.b_hat

    @property
    def c(self):
        return self.c_hat

    @property
    def n(self):
        return self.r

    @property
    def is_sparse(self):
        return False

    def is_real(self):
        return not any(np.iscomplexobj(m) for m in (self.a_hat, self.b_hat, self.c_hat))


def _factor_resolvent(sys, s0):
    """LU factorization of ``A - s0 I``."""
    s0 = complex(s0)
    n = sys.n
    if s0.imag == 0:
        s0 = s0.real
    if sp.issparse(sys.a):
        m = (sys.a - s0 * sp.identity(n, format="csr")).tocsc()
    else:
        m = np.asarray(sys.a) - s0 * np.eye(n)
    try:
        return Factorization(m)
    except _Singular as exc:
        raise SingularShift(s0) from exc


def transfer_function(sys, s):
    """Evaluate ``G(s) = C (sI - A)^{-1} B`` with one linear solve."""
    fact = _factor_resolvent(sys, s)
    # (sI - A)^{-1} B = -(A - sI)^{-1} B
    return complex(-(sys.c @ fact.solve(sys.b)))


def moment(sys, s0, j):
    """Moment ``m_j(s0) = -C (A - s0 I)^{-(j+1)} B``.

    This is the Taylor coefficient ``G^{(j)}(s0) / j!`` of the expansion
    ``G(s) = sum_j m_j(s0) (s - s0)^j``. One factorization, ``j + 1`` solves.
    """
    if j < 0:
        raise ValueError("moment order must be nonnegative")
    fact = _factor_resolvent(sys, s0)
    x = sys.b
    for _ in range(j + 1):
        x = fact.solve(x)
    return complex(-(sys.c @ x))


def moments(sys, s0, count):
    """First ``count`` moments at ``s0`` sharing one factorization."""
    fact = _factor_resolvent(sys, s0)
    out = []
    x = sys.b
    for _ in range(count):
        x = fact.solve(x)
        out.append(complex(-(sys.c @ x)))
    return out


def markov_parameter(sys, j):
    """Markov parameter ``C A^{j-1} B`` for ``j >= 1`` by matrix-vector products."""
    if j < 1:
        raise ValueError("Markov parameters are indexed from 1")
    return markov_parameters(sys, j)[-1]


def markov_parameters(sys, count):
    out = []
    x = sys.b
    for _ in range(count):
        out.append(complex(sys.c @ x))
        x = sys.a @ x
    return out


def solve_lyapunov_dense(sys, kind=GramianKind.CONTROLLABILITY):
    """Exact gramian from the dense Lyapunov equation.

    Solves ``A P + P A^T + B B^T = 0`` (or the observability analogue with
    ``A^T`` and ``C^T``). Up to ``KRON_CAP`` the n^2 x n^2 vectorized system
    is solved directly; above it a Bartels-Stewart solver is used. Refuses
    ``n > ORACLE_CAP``.
    """
    kind = GramianKind.parse(kind)
    n = sys.n
    if n > ORACLE_CAP:
        raise OracleTooLarge(f"dense Lyapunov oracle refused for n={n} > {ORACLE_CAP}")
    a = sys.dense_a()
    if kind is GramianKind.OBSERVABILITY:
        a, v = a.T, sys.c
    else:
        v = sys.b
    rhs = -np.outer(v, v)
    if not rhs.any():
        return np.zeros((n, n))
    if n <= KRON_CAP:
        eye = np.eye(n)
        big = np.kron(eye, a) + np.kron(a, eye)
        p = np.linalg.solve(big, rhs.reshape(-1, order="F")).reshape(n, n, order="F")
    else:
        p = spla.solve_continuous_lyapunov(a, rhs)
    return 0.5 * (p + p.T)


def lyapunov_residual(sys, p, kind=GramianKind.CONTROLLABILITY):
    """Relative Frobenius residual of a gramian candidate."""
    kind = GramianKind.parse(kind)
    a = sys.dense_a()
    if kind is GramianKind.OBSERVABILITY:
        a, v = a.T, sys.c
    else:
        v = sys.b
    bb = np.outer(v, np.conj(v))
    res = a @ p + p @ a.conj().T + bb
    return np.linalg.norm(res) / max(np.linalg.norm(bb), np.finfo(float).tiny)


def _sqrt_factor(p):
    d, x = np.linalg.eigh(p)
    return x * np.sqrt(np.clip(d, 0.0, None))


def hankel_singular_values(sys):
    """Square roots of the eigenvalues of ``P Q``, sorted nonincreasing.

    Computed as the singular values of ``R^T S`` with ``P = S S^T`` and
    ``Q = R R^T``, which avoids forming the product.
    """
    p = solve_lyapunov_dense(sys, GramianKind.CONTROLLABILITY)
    q = solve_lyapunov_dense(sys, GramianKind.OBSERVABILITY)
    return np.linalg.svd(_sqrt_factor(q).T @ _sqrt_factor(p), compute_uv=False)


def similarity_transform(sys, t):
    """System ``(T A T^{-1}, T B, C T^{-1})``."""
    a = sys.dense_a()
    tinv_a = np.linalg.solve(t.T, a.T).T
    return LtiSystem(t @ tinv_a, t @ sys.b, np.linalg.solve(t.T, sys.c))


def h_infinity_sampled(sys, reduced, omegas):
    """Max of ``|G(iw) - G_hat(iw)|`` over the sample frequencies."""
    return max(abs(transfer_function(sys, 1j * w) - transfer_function(reduced, 1j * w))
               for w in omegas)

