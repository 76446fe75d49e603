"""Exception types shared across the package."""


class ChemvitError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ChemvitError, ValueError):
    """Invalid configuration or incompatible geometry."""


class ScheduleError(ChemvitError, ValueError):
    """Reduction schedule cannot be applied to the current token set."""


class NumericError(ChemvitError, FloatingPointError):
    """Non-finite activations inside the encoder."""

    def __init__(self, message: str, layer: int | None = None):
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)
        self.layer = layer


class ShapeError(ChemvitError, ValueError):
    """Operation applied to a token set with an incompatible layout."""


class ParseError(ChemvitError, ValueError):
    """SMILES or reaction text could not be parsed."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"offset {offset}: {message}"
        super().__init__(message)
        self.offset = offset


class ReactionFormatError(ParseError):
    """Reaction string does not split into the three '>' components."""


class DisconnectedError(ChemvitError, ValueError):
    """Molecule has multiple components; split on '.' first."""


class UnsupportedInputError(ChemvitError, ValueError):
    """Input outside the supported size budget."""


class EvalUsageError(ChemvitError, ValueError):
    """Evaluation input violates its usage contract."""


class DatasetError(ChemvitError, ValueError):
    """Ground-truth side of an evaluation sample is invalid."""
