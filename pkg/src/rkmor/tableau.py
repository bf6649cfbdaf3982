"""Butcher tableaus, composite multi-step tableaus and expansion points."""

import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as spla

from rkmor.exceptions import InvalidAdiParameter, InvalidStepSize, InvalidTableau
from rkmor.system import EIG_CAP

#: two expansion points merge when |p - q| <= MERGE_RTOL * max(1, |p|)
MERGE_RTOL = 1e-10
EIG_COND_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    """An ``s``-stage tableau.

    ``lam`` and ``beta`` drive the ``h`` recursion and may be complex;
    ``beta_tilde`` are the real nonnegative weights of the gramian update.
    ``gamma`` (the nodes) is carried for completeness only: the right-hand
    side is autonomous, so the nodes never enter the iteration.
    """

    lam: np.ndarray
    beta: np.ndarray
    beta_tilde: np.ndarray = None
    gamma: np.ndarray = None
    name: str = None

    def __post_init__(self):
        lam = np.atleast_2d(np.asarray(self.lam))
        s = lam.shape[0]
        if s < 1 or lam.shape != (s, s):
            raise InvalidTableau(f"Lambda must be a nonempty square matrix, got {lam.shape}")
        beta = np.atleast_1d(np.asarray(self.beta)).ravel()
        if beta.shape != (s,):
            raise InvalidTableau(f"beta must have length {s}")
        if self.beta_tilde is None:
            if np.iscomplexobj(beta) and np.any(beta.imag != 0) or np.any(beta.real < 0):
                raise InvalidTableau(
                    "beta_tilde must be given explicitly when beta is not real nonnegative")
            bt = beta.real.astype(float)
        else:
            bt = np.atleast_1d(np.asarray(self.beta_tilde)).ravel()
            if np.iscomplexobj(bt):
                if np.any(bt.imag != 0):
                    raise InvalidTableau("beta_tilde must be real")
                bt = bt.real
            bt = bt.astype(float)
        if bt.shape != (s,):
            raise InvalidTableau(f"beta_tilde must have length {s}")
        if np.any(bt < 0) or not np.all(np.isfinite(bt)):
            raise InvalidTableau("beta_tilde entries must be finite and nonnegative")
        gamma = np.zeros(s) if self.gamma is None else np.atleast_1d(
            np.asarray(self.gamma, dtype=float)).ravel()
        if gamma.shape != (s,):
            raise InvalidTableau(f"gamma must have length {s}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "beta_tilde", bt)
        object.__setattr__(self, "gamma", gamma)

    @property
    def s(self):
        return self.lam.shape[0]

    @cached_property
    def eigenvalues(self):
        """Eigenvalues of Lambda; read off the diagonal for triangular Lambda."""
        lam = self.lam
        if not np.any(np.triu(lam, 1)) or not np.any(np.tril(lam, -1)):
            mu = np.diag(lam).astype(complex)
        else:
            mu = np.linalg.eigvals(lam).astype(complex)
            scale = max(1.0, np.abs(lam).max())
            mu[np.abs(mu) <= 1e-13 * scale] = 0.0
        return mu

    @property
    def is_explicit(self):
        return not np.any(np.triu(self.lam))

    @cached_property
    def schur(self):
        """Complex Schur form ``Lambda^T = Q T Q^H`` as ``(T, Q)``."""
        t, q = spla.schur(self.lam.T.astype(complex), output="complex")
        return t, q

    def with_beta_tilde(self, beta_tilde):
        return ButcherTableau(self.lam, self.beta, beta_tilde, self.gamma, self.name)


_S3 = math.sqrt(3.0)

_BUILTINS = {
    "explicit_euler": lambda: ButcherTableau(
        [[0.0]], [1.0], gamma=[0.0], name="explicit_euler"),
    "backward_euler": lambda: ButcherTableau(
        [[1.0]], [1.0], gamma=[1.0], name="backward_euler"),
    "implicit_midpoint": lambda: ButcherTableau(
        [[0.5]], [1.0], gamma=[0.5], name="implicit_midpoint"),
    "gauss_legendre2": lambda: ButcherTableau(
        [[0.25, 0.25 - _S3 / 6], [0.25 + _S3 / 6, 0.25]], [0.5, 0.5],
        gamma=[0.5 - _S3 / 6, 0.5 + _S3 / 6], name="gauss_legendre2"),
    "radau_ia2": lambda: ButcherTableau(
        [[0.25, -0.25], [0.25, 5.0 / 12.0]], [0.25, 0.75],
        gamma=[0.0, 2.0 / 3.0], name="radau_ia2"),
}

_ALIASES = {
    "expliciteuler": "explicit_euler", "euler": "explicit_euler", "ee": "explicit_euler",
    "backwardeuler": "backward_euler", "impliciteuler": "backward_euler", "be": "backward_euler",
    "implicitmidpoint": "implicit_midpoint", "midpoint": "implicit_midpoint",
    "gausslegendre1": "implicit_midpoint",
    "gausslegendre2": "gauss_legendre2", "gl2": "gauss_legendre2",
    "radauia2": "radau_ia2", "radau2": "radau_ia2",
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin(name):
    """Return one of the built-in tableaus by (case-insensitive) name."""
    key = str(name).strip().lower()
    if key not in _BUILTINS:
        key = _ALIASES.get(key.replace("_", "").replace("-", "").replace(" ", ""), key)
    try:
        return _BUILTINS[key]()
    except KeyError:
        raise InvalidTableau(
            f"unknown tableau {name!r}; known: {', '.join(BUILTIN_NAMES)}") from None


def dirk_from_adi_params(mu):
    """Lower triangular tableau equivalent to ADI with shifts ``-1/mu``.

    Diagonal ``mu_i``, entries ``2 Re(mu_l)`` below the diagonal in column
    ``l``, and ``beta = beta_tilde = 2 Re(mu)``.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=complex))
    if mu.size == 0:
        raise InvalidAdiParameter("need at least one parameter")
    if np.any(mu.real <= 0):
        raise InvalidAdiParameter("all parameters need a positive real part")
    s = mu.size
    two_re = 2.0 * mu.real
    lam = np.tril(np.tile(two_re.astype(complex), (s, 1)), -1)
    lam[np.diag_indices(s)] = mu
    if not np.any(mu.imag):
        lam = lam.real
    return ButcherTableau(lam, two_re.copy(), two_re.copy(), name="dirk_adi")


def _check_steps(steps):
    steps = np.asarray(steps, dtype=float).ravel()
    if np.any(~np.isfinite(steps)) or np.any(steps <= 0):
        raise InvalidStepSize("time step sizes must be positive and finite")
    return steps


def eig_condition_violations(tableau, sys_eigs, steps):
    """Triples ``(j, p, q)`` with ``1 - omega_j mu_p lambda_q`` numerically zero."""
    steps = _check_steps(steps)
    mu = tableau.eigenvalues
    lam = np.asarray(sys_eigs, dtype=complex)
    out = []
    for j, w in enumerate(steps):
        prod = w * np.multiply.outer(mu, lam)
        bad = np.argwhere(np.abs(1.0 - prod) <= EIG_COND_RTOL * np.maximum(1.0, np.abs(prod)))
        out.extend((j, int(p), int(q)) for p, q in bad)
    return out


def check_eig_condition(tableau, sys, steps):
    """True iff every stage matrix ``I - omega_j mu_p A`` is nonsingular.

    Above the dense eigenvalue cap the check falls back on a sign argument:
    if every tableau eigenvalue has nonnegative real part no product with an
    eigenvalue of a stable ``A`` can equal ``1/omega``. Other tableaus get a
    warning and ``True``.
    """
    if sys.n > EIG_CAP:
        if np.all(tableau.eigenvalues.real >= 0):
            return True
        warnings.warn("eigenvalue condition not verified for n above the eigenvalue cap",
                      RuntimeWarning, stacklevel=2)
        return True
    return not eig_condition_violations(tableau, sys.eigenvalues(), steps)


def check_adi_condition(tableau):
    """Frobenius norm of ``diag(beta) conj(Lambda) + Lambda^T diag(beta) - beta beta^T``.

    Returns ``inf`` when ``beta_tilde != beta`` (condition not applicable).
    """
    beta = tableau.beta
    if beta.shape != tableau.beta_tilde.shape or not np.allclose(
            beta, tableau.beta_tilde, rtol=0, atol=0):
        return math.inf
    lam = tableau.lam
    m = np.diag(beta) @ np.conj(lam) + lam.T @ np.diag(beta) - np.outer(beta, beta)
    return float(np.linalg.norm(m))


@dataclass(frozen=True, eq=False)
class CompositeTableau:
    """All ``N`` steps of a run folded into one ``N s``-stage step.

    ``lambda_hat`` holds the block upper triangular transpose of the
    composite Lambda: diagonal blocks ``omega_j Lambda^T`` and blocks
    ``omega_j [beta, ..., beta]`` to their right.
    """

    lambda_hat: np.ndarray
    beta_hat: np.ndarray
    beta_tilde_hat: np.ndarray
    steps: np.ndarray
    base: ButcherTableau

    @property
    def s(self):
        return self.base.s

    @property
    def n_steps(self):
        return len(self.steps)

    @property
    def size(self):
        return self.lambda_hat.shape[0]

    def as_tableau(self):
        """The equivalent single-step tableau (use with step size 1)."""
        return ButcherTableau(self.lambda_hat.T, self.beta_hat, self.beta_tilde_hat,
                              name=f"composite({self.base.name})")

    def eigenvalues(self):
        """Eigenvalues as the union of ``sigma(omega_j Lambda)``, step-major order."""
        return np.concatenate([w * self.base.eigenvalues for w in self.steps])

    def eigenvalue_groups(self, rtol=MERGE_RTOL):
        """Distinct eigenvalues with algebraic multiplicities."""
        return _merge(self.eigenvalues(), rtol)

    def is_observable(self, tol=1e-10):
        """PBH test for the pair ``(lambda_hat, 1^T)``."""
        lt = self.lambda_hat
        ns = lt.shape[0]
        ones = np.ones((1, ns))
        scale = max(1.0, np.linalg.norm(lt, 2))
        for mu, _ in self.eigenvalue_groups():
            m = np.vstack([lt - mu * np.eye(ns), ones])
            sv = np.linalg.svd(m, compute_uv=False)
            if sv[-1] <= tol * scale:
                return False
        return True

    def jordan_block_sizes(self, mu, tol=1e-10):
        """Sizes of the Jordan blocks of ``lambda_hat`` at eigenvalue ``mu``.

        Detected from ranks of ``(lambda_hat - mu I)^k``; no Jordan form is
        computed.
        """
        lt = self.lambda_hat
        ns = lt.shape[0]
        shifted = lt - mu * np.eye(ns)
        norm = max(1.0, np.linalg.norm(shifted, 2))
        ranks = [ns]
        power = np.eye(ns, dtype=complex)
        for k in range(1, ns + 1):
            power = power @ shifted
            rk = np.linalg.matrix_rank(power, tol=tol * norm ** k)
            ranks.append(rk)
            if rk == ranks[-2]:
                break
        # blocks of size >= k: ranks[k-1] - ranks[k]
        at_least = [ranks[k - 1] - ranks[k] for k in range(1, len(ranks))]
        at_least.append(0)
        sizes = []
        for k in range(1, len(at_least)):
            sizes.extend([k] * (at_least[k - 1] - at_least[k]))
        return sorted(sizes, reverse=True)


def assemble_composite(tableau, steps):
    steps = _check_steps(steps)
    s = tableau.s
    n_steps = len(steps)
    dtype = np.result_type(tableau.lam, tableau.beta, float)
    lt = np.zeros((n_steps * s, n_steps * s), dtype=dtype)
    beta_cols = np.tile(tableau.beta.reshape(-1, 1), (1, s))
    for j, w in enumerate(steps):
        rows = slice(j * s, (j + 1) * s)
        lt[rows, rows] = w * tableau.lam.T
        for k in range(j + 1, n_steps):
            lt[rows, k * s:(k + 1) * s] = w * beta_cols
    beta_hat = np.concatenate([w * tableau.beta for w in steps]) if n_steps else np.zeros(0)
    bt_hat = np.concatenate([w * tableau.beta_tilde for w in steps]) if n_steps else np.zeros(0)
    return CompositeTableau(lt, beta_hat, bt_hat, steps, tableau)


class Side(enum.Enum):
    INPUT = "input"
    OUTPUT = "output"


@dataclass(frozen=True)
class ExpansionPoint:
    location: complex  # complex('inf') encodes the point at infinity
    multiplicity: int
    side: Side

    @property
    def is_infinite(self):
        return math.isinf(self.location.real)


def _merge(values, rtol=MERGE_RTOL):
    groups = []
    for v in values:
        for g in groups:
            p = g[0]
            if (math.isinf(p.real) and math.isinf(v.real)) or (
                    not math.isinf(p.real) and not math.isinf(v.real)
                    and abs(p - v) <= rtol * max(1.0, abs(p))):
                g[1] += 1
                break
        else:
            groups.append([complex(v), 1])
    return [(g[0], g[1]) for g in groups]


INF = complex(math.inf, 0.0)


def _inverse_points(tableau, steps, conjugate):
    pts = []
    for w in steps:
        for mu in tableau.eigenvalues:
            if mu == 0:
                pts.append(INF)
            else:
                z = w * mu
                pts.append(1.0 / (np.conj(z) if conjugate else z))
    return pts


@dataclass(frozen=True)
class ExpansionPointSet:
    points: tuple

    def side(self, side):
        return [p for p in self.points if p.side is Side(side)]

    def total_multiplicity(self, side):
        return sum(p.multiplicity for p in self.side(side))

    def finite(self):
        return [p for p in self.points if not p.is_infinite]

    def combined(self, rtol=MERGE_RTOL):
        """Interpolation conditions per location, summed over both sides.

        Returns ``[(location, input_multiplicity, output_multiplicity)]``.
        Where an input point meets an output point the matched derivative
        orders add up.
        """
        out = []
        for p in self.points:
            for entry in out:
                q = entry[0]
                same = (p.is_infinite and math.isinf(q.real)) or (
                    not p.is_infinite and not math.isinf(q.real)
                    and abs(p.location - q) <= rtol * max(1.0, abs(q)))
                if same:
                    entry[1 if p.side is Side.INPUT else 2] += p.multiplicity
                    break
            else:
                entry = [p.location, 0, 0]
                entry[1 if p.side is Side.INPUT else 2] = p.multiplicity
                out.append(entry)
        return [tuple(e) for e in out]


def predict_expansion_points(t_c, steps_c, t_o, steps_o):
    """Interpolation points implied by the two tableaus and step sequences.

    Input side: ``1 / (omega_j mu)`` for the eigenvalues ``mu`` of the
    controllability tableau. Output side: ``1 / conj(tau_j nu)``. Zero
    eigenvalues become the point at infinity; coinciding points on one side
    are merged with summed multiplicity.
    """
    steps_c = _check_steps(steps_c)
    steps_o = _check_steps(steps_o)
    pts = []
    for side, tab, steps, conj in ((Side.INPUT, t_c, steps_c, False),
                                   (Side.OUTPUT, t_o, steps_o, True)):
        if tab is None:
            continue
        for loc, mult in _merge(_inverse_points(tab, steps, conj)):
            pts.append(ExpansionPoint(loc, mult, side))
    return ExpansionPointSet(tuple(pts))


def raw_point_count(t_c, steps_c, t_o, steps_o):
    return len(steps_c) * t_c.s + len(steps_o) * t_o.s

