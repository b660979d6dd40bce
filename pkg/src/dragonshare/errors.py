"""Exception hierarchy shared across the package."""


class DragonShareError(Exception):
    """Base class for all package errors."""


class ValidationError(DragonShareError, ValueError):
    """Malformed input: unsorted cut, bad tree, out-of-range index, ..."""


class DomainError(DragonShareError, ValueError):
    """Operands that are individually valid but cannot be combined."""


class CapacityError(DragonShareError):
    """An exhaustive routine was asked for an instance above its size guard."""


class DragonConditionError(DragonShareError):
    """The dragon marriage condition fails.

    ``witness`` is a set S of (1-based) set indices whose union has at most |S| elements.
    """

    def __init__(self, witness, message=None):
        self.witness = frozenset(witness)
        super().__init__(message or f"dragon marriage condition violated on S={sorted(self.witness)}")


class ContractError(DragonShareError):
    """A preference model violates partition equivalence on a sampled pair of cuts."""


class SearchFailure(DragonShareError):
    """Balanced-point search ran out of budget; ``best`` is the best point seen."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class EnvyVerificationError(DragonShareError):
    """A computed division failed independent envy verification."""

    def __init__(self, message, player=None, dragon=None, margin=None):
        self.player = player
        self.dragon = dragon
        self.margin = margin
        super().__init__(message)
