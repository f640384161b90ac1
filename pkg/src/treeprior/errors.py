"""Exception hierarchy shared by all modules."""


class TreePriorError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(TreePriorError, ValueError):
    """Invalid base-tree shape, node address, or shape mismatch."""


class SubtreeError(TreePriorError, ValueError):
    """A node set that is not a full rooted subtree of the base tree."""


class ParameterError(TreePriorError, ValueError):
    """Out-of-range distribution or hyperparameter values."""


class NumericError(TreePriorError, ArithmeticError):
    """Non-finite intermediate values or undefined quantities."""


class ZeroEvidenceError(NumericError):
    """The observation has zero probability under every tree."""


class CapExceededError(TreePriorError):
    """Exhaustive enumeration would exceed the configured tree cap."""

    def __init__(self, count, cap, exact=True):
        self.count = count
        self.cap = cap
        self.exact = exact
        rel = "=" if exact else ">="
        super().__init__(f"|T| {rel} {count} exceeds enumeration cap {cap}")
