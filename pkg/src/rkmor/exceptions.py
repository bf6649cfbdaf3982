"""Exception hierarchy for rkmor."""


class RkmorError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(RkmorError, ValueError):
    pass


class IngestionError(RkmorError, ValueError):
    """A system file could not be parsed."""


class UnstableSystem(RkmorError, ValueError):
    def __init__(self, max_real_part):
        self.max_real_part = max_real_part
        super().__init__(
            f"system not stable: max real part of eigenvalues is {max_real_part:.6g}")


class SingularShift(RkmorError, ArithmeticError):
    """The shifted matrix ``s I - A`` is numerically singular."""

    def __init__(self, shift, context=None):
        self.shift = complex(shift)
        self.context = context
        msg = f"singular shifted matrix at s={self.shift}"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


class SingularShiftedOperator(SingularShift):
    """``I - shift * A`` is numerically singular."""

    def __init__(self, shift, stage=None):
        self.stage = stage
        ctx = None if stage is None else f"stage {stage}"
        super().__init__(shift, ctx)
        self.args = (f"I - shift*A singular for shift={self.shift}"
                     + (f" at {ctx}" if ctx else ""),)


class OracleTooLarge(RkmorError, ValueError):
    pass


class InvalidTableau(RkmorError, ValueError):
    pass


class InvalidAdiParameter(RkmorError, ValueError):
    pass


class InvalidStepSize(RkmorError, ValueError):
    pass


class EigConditionViolated(RkmorError, ValueError):
    """Some stage system ``I - omega_j mu_p A`` is singular.

    ``violations`` lists ``(j, p, q)`` index triples: step, tableau
    eigenvalue, system eigenvalue.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        head = ", ".join(str(v) for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"eigenvalue condition violated at (j, p, q) = {head}{more}")


class RankDeficient(RkmorError, ValueError):
    def __init__(self, rank, expected, sigma=None):
        self.rank = rank
        self.expected = expected
        self.sigma = sigma
        super().__init__(
            f"Z_o^H Z_c has numerical rank {rank}, expected {expected}")


class EmptyFactor(RkmorError, ValueError):
    pass


class UnpairedShifts(RkmorError, ValueError):
    pass
