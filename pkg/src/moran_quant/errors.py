"""Exception types shared across the package."""


class MoranQuantError(Exception):
    """Base class for all package errors."""


class InvalidWordError(MoranQuantError):
    """A word does not fit the governing alphabet (symbol or length out of range)."""


class NoWitnessError(MoranQuantError):
    """No interior separation witness exists within the allowed suffix depth."""


class BudgetError(MoranQuantError):
    """A configured size budget would be exceeded; names the offending parameter."""


class ConfigError(MoranQuantError):
    """Invalid configuration input; message names the offending key."""


class PreconditionError(MoranQuantError):
    """An operation was called outside its documented domain."""
