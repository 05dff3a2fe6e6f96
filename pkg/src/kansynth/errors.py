"""Exception hierarchy shared by every kansynth module."""


class KanError(Exception):
    """Base class for all kansynth errors."""


class StructureError(KanError, ValueError):
    """A network or edge function violates a structural invariant."""

    def __init__(self, message, layer=None):
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)
        self.layer = layer


class EvaluationError(KanError, ArithmeticError):
    """A non-finite value appeared while evaluating a network."""

    def __init__(self, message, layer=None):
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)
        self.layer = layer


class RegistryError(KanError, KeyError):
    """Unknown base-function identifier."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class GadgetSizeError(KanError, ValueError):
    """A dyadic numerator exceeds the configured fan-out bound."""


class ConditioningError(KanError, ValueError):
    """The finite-difference quadratic is too close to degenerate."""


class FitError(KanError, RuntimeError):
    """Least-squares fitting produced unusable coefficients."""


class DecodeError(KanError, ValueError):
    """A network document failed to parse or validate.

    ``path`` is a JSON-pointer-like location of the offending field.
    """

    def __init__(self, message, path=""):
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path


class UnknownEdgeKindError(DecodeError):
    pass


class FormatVersionError(DecodeError):
    pass
