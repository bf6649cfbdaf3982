"""Numerical checks of the interpolation and span properties, and the
ADI / balanced-POD cross-checks."""

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spla
import scipy.sparse as sp

from rkmor.exceptions import InvalidAdiParameter, SingularShift
from rkmor.quadrature import (LowRankFactor, QuadratureState, quadrature_step,
                              stage_solve_kron)
from rkmor.shifted import Factorization, ShiftedSolver, _Singular, matrix_key
from rkmor.system import GramianKind, markov_parameters, moments
from rkmor.tableau import ButcherTableau, assemble_composite, _check_steps

#: Lemma hypotheses are only checked up to this composite size
HYPOTHESIS_CAP = 200


def principal_angles(x, y):
    """Principal angles (radians, descending) between ``span(x)`` and ``span(y)``."""
    return spla.subspace_angles(np.asarray(x), np.asarray(y))


def _relerr(ref, val):
    return abs(ref - val) / max(1.0, abs(ref))


@dataclass(frozen=True)
class InterpolationEntry:
    point: complex
    order: int
    original: complex
    reduced: complex
    relative_error: float

    @property
    def at_infinity(self):
        return math.isinf(self.point.real)


@dataclass(frozen=True)
class InterpolationReport:
    """Per-condition comparison of original and reduced transfer functions.

    For a finite point ``order`` is the moment index ``i`` (derivative of
    order ``i``); at infinity it is the Markov parameter index ``j >= 1``.
    """

    entries: tuple
    tol: float
    within_guarantees: bool = True
    hypothesis: str = "verified"
    notes: tuple = field(default_factory=tuple)

    @property
    def max_relative_error(self):
        return max((e.relative_error for e in self.entries), default=0.0)

    @property
    def passed(self):
        return self.max_relative_error <= self.tol

    def to_dict(self):
        from rkmor.io import encode_complex

        return {
            "entries": [
                {"point": encode_complex(e.point), "order": e.order,
                 "original": encode_complex(e.original), "reduced": encode_complex(e.reduced),
                 "relative_error": e.relative_error}
                for e in self.entries],
            "max_relative_error": self.max_relative_error,
            "tol": self.tol,
            "passed": self.passed,
            "within_guarantees": self.within_guarantees,
            "hypothesis": self.hypothesis,
            "notes": list(self.notes),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self):
        lines = [f"{'point':>28}  {'order':>5}  {'|G|':>11}  {'rel. error':>10}"]
        for e in self.entries:
            pt = "inf" if e.at_infinity else f"{e.point.real:.6g}{e.point.imag:+.6g}j"
            lines.append(f"{pt:>28}  {e.order:>5}  {abs(e.original):11.4e}  {e.relative_error:10.3e}")
        lines.append(f"max relative error {self.max_relative_error:.3e} (tol {self.tol:g}): "
                     + ("PASS" if self.passed else "FAIL"))
        if not self.within_guarantees:
            lines.append("note: truncated projection, outside the interpolation guarantees")
        if self.hypothesis != "verified":
            lines.append(f"note: hypotheses {self.hypothesis}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


def verify_interpolation(sys, result, points, tol=1e-6, hypothesis="verified"):
    """Compare moments (or Markov parameters) at every predicted point.

    Where an input point and an output point coincide, the orders of both
    sides add up. The relative error is ``|G - G_hat| / max(1, |G|)``.
    """
    reduced = result.reduced
    entries = []
    for loc, m_in, m_out in points.combined():
        count = m_in + m_out
        if math.isinf(loc.real):
            ref = markov_parameters(sys, count)
            red = markov_parameters(reduced, count)
            orders = range(1, count + 1)
        else:
            try:
                ref = moments(sys, loc, count)
            except SingularShift as exc:
                raise SingularShift(loc, "expansion point in the spectrum of A") from exc
            try:
                red = moments(reduced, loc, count)
            except SingularShift as exc:
                raise SingularShift(loc, "expansion point in the spectrum of A_hat") from exc
            orders = range(count)
        for o, g, gh in zip(orders, ref, red):
            entries.append(InterpolationEntry(complex(loc), o, g, gh, _relerr(g, gh)))
    return InterpolationReport(tuple(entries), tol, result.within_guarantees, hypothesis)


@dataclass(frozen=True)
class SpanReport:
    angle: float
    dimension_match: bool
    hypothesis: str = "verified"

    def __iter__(self):
        yield self.angle
        yield self.dimension_match


def reference_basis(a, rhs, groups):
    """Columns ``(I - mu A)^{-i} rhs`` (``A^{i-1} rhs`` for ``mu = 0``), ``i = 1..m``."""
    cols = []
    for mu, mult in groups:
        if mu == 0:
            x = np.asarray(rhs, dtype=complex)
            for _ in range(mult):
                cols.append(x)
                x = a @ x
            continue
        n = a.shape[0]
        mat = (sp.identity(n, format="csc") - mu * a).tocsc() if sp.issparse(a) else np.eye(n) - mu * a
        try:
            fact = Factorization(mat)
        except _Singular as exc:
            raise SingularShift(1 / mu) from exc
        x = np.asarray(rhs, dtype=complex)
        for _ in range(mult):
            x = fact.solve(x)
            cols.append(x)
    return np.column_stack(cols) if cols else np.zeros((a.shape[0], 0), dtype=complex)


def check_composite_hypothesis(composite):
    """``"verified"``, ``"failed"`` or ``"unverified"`` for observability of the composite pair."""
    if composite.size > HYPOTHESIS_CAP:
        return "unverified"
    return "verified" if composite.is_observable() else "failed"


def verify_span(factor, sys, tableau, steps, kind=GramianKind.CONTROLLABILITY):
    """Largest principal angle between ``span(Z)`` and the predicted Krylov space.

    The predicted space collects, for every distinct eigenvalue ``mu`` of the
    composite tableau with Jordan block size ``m``, the vectors
    ``(I - mu A)^{-i} B`` for ``i = 1..m`` (or ``A^i B``, ``i < m``, when
    ``mu = 0``).
    """
    kind = GramianKind.parse(kind)
    composite = assemble_composite(tableau, steps)
    if np.any(composite.beta_tilde_hat <= 0):
        raise ValueError("span check needs strictly positive weights")
    if composite.size >= sys.n:
        raise ValueError("span check needs N*s < n")
    hypothesis = check_composite_hypothesis(composite)
    groups = []
    for mu, mult in composite.eigenvalue_groups():
        if hypothesis == "unverified":
            groups.append((mu, mult))
        else:
            groups.append((mu, max(composite.jordan_block_sizes(mu))))
    a, rhs = sys.for_kind(kind)
    ref = reference_basis(a, rhs, groups)
    z = factor.z if isinstance(factor, LowRankFactor) else np.asarray(factor)
    rank_z = np.linalg.matrix_rank(z)
    rank_ref = np.linalg.matrix_rank(ref)
    angle = float(np.max(principal_angles(z, ref))) if z.shape[1] and ref.shape[1] else 0.0
    return SpanReport(angle, rank_z == rank_ref, hypothesis)


def adi_iteration(sys, kind, alphas):
    """Low-rank ADI factor with shifts ``alphas`` in the open left half-plane.

    Standard recursion: ``V_1 = (A + a_1 I)^{-1} B``,
    ``V_i = V_{i-1} - (a_i + conj(a_{i-1})) (A + a_i I)^{-1} V_{i-1}``,
    ``Z = [sqrt(-2 Re a_1) V_1, ..., sqrt(-2 Re a_k) V_k]``.
    """
    kind = GramianKind.parse(kind)
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    if np.any(alphas.real >= 0):
        raise InvalidAdiParameter("ADI shifts need a negative real part")
    a, rhs = sys.for_kind(kind)
    n = a.shape[0]
    cols = []
    v = np.asarray(rhs, dtype=complex)
    prev = None
    for alpha in alphas:
        if sp.issparse(a):
            mat = (a + alpha * sp.identity(n, format="csc")).tocsc()
        else:
            mat = np.asarray(a) + alpha * np.eye(n)
        try:
            fact = Factorization(mat)
        except _Singular as exc:
            raise SingularShift(-alpha, "ADI shift in the spectrum of A") from exc
        if prev is None:
            v = fact.solve(v)
        else:
            v = v - (alpha + np.conj(prev)) * fact.solve(v)
        cols.append(np.sqrt(-2.0 * alpha.real) * v)
        prev = alpha
    z = np.column_stack(cols) if cols else np.zeros((n, 0), dtype=complex)
    return LowRankFactor(z, kind, -1.0 / alphas if alphas.size else np.zeros(0, dtype=complex))


def bpod_tableau(t_h, weight):
    """The ``s + 1`` stage tableau reproducing a snapshot update with ``weight``.

    ``Lambda = [[Lambda_h, 0], [beta_h^T, 0]]``, ``beta = [beta_h; 0]``,
    ``beta_tilde = [0, ..., 0, weight]``; the last stage equals the next
    trajectory value.
    """
    s = t_h.s
    dtype = np.result_type(t_h.lam, t_h.beta, float)
    lam = np.zeros((s + 1, s + 1), dtype=dtype)
    lam[:s, :s] = t_h.lam
    lam[s, :s] = t_h.beta
    beta = np.concatenate([t_h.beta, [0.0]])
    bt = np.zeros(s + 1)
    bt[s] = weight
    return ButcherTableau(lam, beta, bt, name=f"bpod({t_h.name})")


def bpod_embedding(sys, kind, t_h, steps, deltas, solver=None):
    """Balanced-POD snapshot factor produced by the quadrature itself.

    Step ``j`` runs with :func:`bpod_tableau` and weight ``delta_j / omega_j``,
    so ``Z Z^H = sum_j delta_j h_j h_j^H``.
    """
    kind = GramianKind.parse(kind)
    steps = _check_steps(steps)
    deltas = np.asarray(deltas, dtype=float).ravel()
    if deltas.shape != steps.shape:
        raise ValueError("need one quadrature weight per step")
    if np.any(deltas < 0):
        raise ValueError("quadrature weights must be nonnegative")
    a, rhs = sys.for_kind(kind)
    solver = solver or ShiftedSolver()
    akey = matrix_key(a)
    state = QuadratureState.initial(rhs, kind)
    for w, d in zip(steps, deltas):
        state = quadrature_step(a, state, bpod_tableau(t_h, d / w), w, solver=solver, akey=akey)
    return state.z


def bpod_trajectory(sys, kind, t_h, steps, deltas):
    """Direct snapshot sum: ``h_j`` from the plain Runge-Kutta recursion.

    Stages come from the dense vectorized solve, independent of the Schur
    path used by the quadrature.
    """
    kind = GramianKind.parse(kind)
    steps = _check_steps(steps)
    a, rhs = sys.for_kind(kind)
    h = np.asarray(rhs, dtype=complex)
    snaps = []
    for w, d in zip(steps, np.asarray(deltas, dtype=float)):
        hs = stage_solve_kron(a, h, t_h, w)
        h = h + w * (a @ (hs @ t_h.beta))
        snaps.append(np.sqrt(d) * h)
    z = np.column_stack(snaps) if snaps else np.zeros((len(h), 0), dtype=complex)
    return LowRankFactor(z, kind)


def relative_product_difference(z1, z2):
    """``||Z1 Z1^H - Z2 Z2^H||_F / ||Z2 Z2^H||_F``."""
    z1 = z1.z if isinstance(z1, LowRankFactor) else z1
    z2 = z2.z if isinstance(z2, LowRankFactor) else z2
    p1 = z1 @ z1.conj().T
    p2 = z2 @ z2.conj().T
    denom = np.linalg.norm(p2)
    return float(np.linalg.norm(p1 - p2) / (denom if denom > 0 else 1.0))
