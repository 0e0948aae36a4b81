"""Exception types shared across the package."""


class NumericFailure(ArithmeticError):
    """A linear-algebra routine failed to converge or produced unusable output."""


class InvariantBreach(RuntimeError):
    """A runtime invariant (inverse drift, monotone ledgers, ...) was violated."""


class ConfigError(ValueError):
    """Malformed or incomplete experiment configuration."""
