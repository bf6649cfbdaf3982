"""Direct solves with ``I - shift * A`` and an LRU factorization cache."""

import hashlib
import threading
import warnings
from collections import OrderedDict
from typing import NamedTuple

import numpy as np
import scipy.linalg as spla
import scipy.sparse as sp
import scipy.sparse.linalg as spsla

from rkmor.exceptions import SingularShiftedOperator

_SHIFT_RTOL = 1e-14


class _Singular(Exception):
    pass


class Factorization:
    """LU factorization of a square (dense or sparse) matrix.

    Complex right-hand sides are handled for real factors by solving the
    real and imaginary parts separately.
    """

    def __init__(self, matrix):
        n = matrix.shape[0]
        self.n = n
        self.sparse = sp.issparse(matrix)
        if self.sparse:
            try:
                self._lu = spsla.splu(sp.csc_matrix(matrix))
            except RuntimeError as exc:
                raise _Singular(str(exc)) from exc
            diag = np.abs(self._lu.U.diagonal())
        else:
            with warnings.catch_warnings():
                # singularity is detected below from the pivots
                warnings.simplefilter("ignore", spla.LinAlgWarning)
                lu, piv = spla.lu_factor(np.asarray(matrix), check_finite=False)
            self._lu = (lu, piv)
            diag = np.abs(np.diag(lu))
        self.dtype = self._lu.U.dtype if self.sparse else self._lu[0].dtype
        if n and (diag.min() <= max(n, 10) * np.finfo(float).eps * diag.max()
                  or not np.isfinite(diag).all()):
            raise _Singular("numerically singular factor")

    def solve(self, rhs):
        rhs = np.asarray(rhs)
        real_factor = not np.iscomplexobj(np.empty(0, dtype=self.dtype))
        if real_factor and np.iscomplexobj(rhs):
            return self._solve(rhs.real) + 1j * self._solve(rhs.imag)
        return self._solve(rhs)

    def _solve(self, rhs):
        if self.sparse:
            return self._lu.solve(np.ascontiguousarray(rhs))
        return spla.lu_solve(self._lu, rhs, check_finite=False)


def shifted_operator(a, shift):
    """Return ``I - shift * a`` in the storage format of ``a``."""
    n = a.shape[0]
    if sp.issparse(a):
        return (sp.identity(n, format="csc") - shift * a).tocsc()
    return np.eye(n) - shift * np.asarray(a)


def matrix_key(a):
    """Structural hash of a dense or sparse matrix."""
    h = hashlib.blake2b(digest_size=16)
    if sp.issparse(a):
        a = a.tocsr()
        h.update(b"csr")
        for arr in (a.indptr, a.indices, a.data):
            h.update(np.ascontiguousarray(arr).tobytes())
    else:
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode())
    h.update(repr(a.shape).encode())
    if not sp.issparse(a):
        h.update(a.tobytes())
    return h.hexdigest()


def _is_real(a):
    return not np.iscomplexobj(a.data if sp.issparse(a) else a)


class CacheStats(NamedTuple):
    entries: int
    hits: int
    misses: int


class ShiftedSolver:
    """Solve ``(I - shift * A) X = rhs`` with cached LU factorizations.

    Factorizations are kept in a least-recently-used cache keyed on a
    structural hash of ``A`` and the shift. Two shifts are the same key when
    they agree to 1e-14 relative. For real ``A`` a cached factorization at
    ``conj(shift)`` is reused through conjugation.

    The cache is guarded by a lock, so one solver can be shared by threads.
    """

    def __init__(self, capacity=32):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._cache = OrderedDict()
        self._lock = threading.Lock()
        self._hits = 0
        self._misses = 0

    def cache_stats(self):
        with self._lock:
            return CacheStats(len(self._cache), self._hits, self._misses)

    def clear(self):
        with self._lock:
            self._cache.clear()
            self._hits = self._misses = 0

    def _lookup(self, akey, shift):
        for key in self._cache:
            if key[0] == akey and abs(key[1] - shift) <= _SHIFT_RTOL * max(abs(shift), abs(key[1])):
                self._cache.move_to_end(key)
                return self._cache[key]
        return None

    def factorization(self, a, shift, akey=None):
        """Return ``(factorization, conjugated)`` for ``I - shift * a``."""
        shift = complex(shift)
        akey = matrix_key(a) if akey is None else akey
        with self._lock:
            fact = self._lookup(akey, shift)
            if fact is not None:
                self._hits += 1
                return fact, False
            if shift.imag != 0.0 and _is_real(a):
                fact = self._lookup(akey, shift.conjugate())
                if fact is not None:
                    self._hits += 1
                    return fact, True
            self._misses += 1
        s = shift.real if shift.imag == 0.0 else shift
        try:
            fact = Factorization(shifted_operator(a, s))
        except _Singular as exc:
            raise SingularShiftedOperator(shift) from exc
        with self._lock:
            self._cache[(akey, shift)] = fact
            while len(self._cache) > self.capacity:
                self._cache.popitem(last=False)
        return fact, False

    def solve(self, a, shift, rhs, akey=None):
        """Solve ``(I - shift * a) x = rhs`` for one or several columns."""
        rhs = np.asarray(rhs)
        if shift == 0:
            return rhs.astype(complex, copy=True)
        fact, conjugated = self.factorization(a, shift, akey=akey)
        if conjugated:
            return np.conj(fact.solve(np.conj(rhs)))
        return np.asarray(fact.solve(rhs), dtype=complex)


_default_solver = ShiftedSolver()


def solve_shifted(a, shift, rhs, solver=None):
    """Solve ``(I - shift * a) x = rhs`` using ``solver`` (module default if None)."""
    return (solver or _default_solver).solve(a, shift, rhs)
