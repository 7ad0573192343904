"""Exception types shared by all modules."""


class NoisyTreeError(Exception):
    pass


class BudgetExceeded(NoisyTreeError, ValueError):
    """A generator would create more nodes than the configured budget."""


class TreeFormatError(NoisyTreeError, ValueError):
    """Malformed tree or adversary file."""


class EnumerationCapExceeded(NoisyTreeError):
    """Too many advice-bearing nodes for exact enumeration."""


class MissingAdversary(NoisyTreeError, ValueError):
    pass


class MissingAdvice(NoisyTreeError):
    """A path quantity needs advice that is not (yet) known."""


class HypothesisViolated(NoisyTreeError, ValueError):
    pass


class StepCapExceeded(NoisyTreeError):
    def __init__(self, steps: int):
        super().__init__(f"walk did not reach the treasure within {steps} steps")
        self.steps = steps


class InvalidSpec(NoisyTreeError, ValueError):
    pass
