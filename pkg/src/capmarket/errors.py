"""Exception types shared across the package; each maps to a CLI exit code."""


class CapMarketError(Exception):
    """Base class for all package errors."""


class ParseError(CapMarketError):
    """Malformed instance or state file (CLI exit code 2)."""


class NotMoneyClearing(CapMarketError):
    """Market cannot absorb all buyer money; no solvable start (exit code 3)."""


class InvariantError(CapMarketError):
    """A solver invariant was violated; indicates a bug, not bad input (exit 4)."""


class EnumerationGuard(CapMarketError):
    """A brute-force oracle was asked to enumerate beyond its hard limit."""
