"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Matrix input is malformed (wrong dimensionality, NaN/Inf entries)."""


class InvalidArgumentError(ValueError):
    """A scalar or vector parameter violates its documented constraint."""


class StepFailureError(RuntimeError):
    """Backtracking ran out of doublings while the objective still increased."""

    def __init__(self, previous_objective, candidate_objective, mu):
        self.previous_objective = previous_objective
        self.candidate_objective = candidate_objective
        self.mu = mu
        super().__init__(
            f"objective increased from {previous_objective!r} to "
            f"{candidate_objective!r} after backtracking to mu={mu!r}"
        )


class ImageFormatError(ValueError):
    """Base class for graymap parsing problems."""


class UnsupportedFormatError(ImageFormatError):
    pass


class MalformedHeaderError(ImageFormatError):
    pass


class TruncatedPayloadError(ImageFormatError):
    pass


class UnsupportedMaxValueError(ImageFormatError):
    pass


class InvalidMaskError(ImageFormatError):
    pass


class ConfigError(ValueError):
    """Base class for problems in key = value files."""


class ConfigParseError(ConfigError):
    def __init__(self, message, line_number):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class ConfigValueError(ConfigError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
