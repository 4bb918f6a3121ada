"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """Malformed configuration file, key, or override."""


class ModelValidityError(ValueError):
    """Parameter set violates a modeling assumption (construction refused)."""


class NumericalError(RuntimeError):
    """Quadrature, root finding, or fixed-point iteration failed to converge."""


class MultiChainWarning(UserWarning):
    """Policy-induced chain has multiple recurrent classes; the returned
    stationary distribution is the limit from the uniform start."""
