"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`ScenverError`,
so callers (the CLI in particular) can tell modelling problems apart from bugs.
"""


class ScenverError(Exception):
    """Base class for all package errors."""


class ZeroRowTotal(ScenverError, ValueError):
    def __init__(self, state):
        self.state = state
        super().__init__(f"state {state!r} has no samples in the contingency matrix")


class DomainMismatch(ScenverError, ValueError):
    pass


class VanishingMass(ScenverError, ValueError):
    def __init__(self, mass):
        self.mass = mass
        super().__init__(f"subdistribution mass {mass!r} is too small to normalize")


class DimensionMismatch(ScenverError, ValueError):
    pass


class UnknownEnvironment(ScenverError, KeyError):
    def __init__(self, env):
        self.env = env
        super().__init__(f"no chain for environment {env!r}")

    def __str__(self):
        return self.args[0]


class MissingEnvironment(UnknownEnvironment):
    def __init__(self, env):
        super().__init__(env)
        self.args = (f"no perception abstraction for environment {env!r}",)


class VacuousPrecondition(ScenverError, ValueError):
    """The precondition has no point in common with the probability simplex."""


class PremiseFailed(ScenverError):
    def __init__(self, index, verdict):
        self.index = index
        self.verdict = verdict
        self.counterexample = verdict.counterexample
        x = verdict.counterexample
        if len(x) <= 8:
            shown = "[" + ", ".join(f"{v:.10g}" for v in x) + "]"
        else:
            support = [i for i, v in enumerate(x) if v > 0]
            shown = f"supported on {len(support)} of {len(x)} states"
        super().__init__(
            f"premise {index} failed ({verdict.violated_obligation}: {verdict.value:.10g} > {verdict.bound:.10g}); "
            f"counterexample {shown}"
        )


class BudgetExceeded(ScenverError, ValueError):
    pass


class InvalidParameter(ScenverError, ValueError):
    pass


class ParseError(ScenverError, ValueError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class NegativeCount(ParseError):
    pass


class DuplicateLabel(ParseError):
    pass
