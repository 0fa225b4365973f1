"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A scenario or component configuration violates its contract.

    The message starts with the offending key or field name so CLI users can
    locate the problem in their scenario file.
    """
