"""Exception types.

Every error carries a short machine-readable ``code`` so the command line
front end can print a greppable diagnostic.
"""


class AngularPoolError(ValueError):
    code = "error"


class InvalidInputError(AngularPoolError):
    code = "invalid-input"


class DegenerateSupportError(AngularPoolError):
    code = "degenerate-support"


class InvalidAngleError(AngularPoolError):
    code = "invalid-angle"


class NonMonotoneResultError(AngularPoolError):
    code = "non-monotone-result"


class UndefinedDensityError(AngularPoolError):
    code = "undefined-density"


class InvalidFractionError(AngularPoolError):
    code = "invalid-fraction"


class ConfigError(AngularPoolError):
    code = "invalid-config"


class ParseError(AngularPoolError):
    code = "parse-error"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
