"""Exception types raised by cone_nn."""


class ConeNNError(Exception):
    """Base class of every error raised by the package."""


class DimensionError(ConeNNError, ValueError):
    """Operand shapes do not conform."""

    def __init__(self, message, shapes=()):
        super().__init__(message)
        self.shapes = tuple(shapes)


class DomainError(ConeNNError, ValueError):
    """Input outside the domain of an operation (non-finite value, empty rectangle...)."""


class ValidationError(ConeNNError, ValueError):
    """Arguments or data that break a documented precondition."""


class FormatError(ConeNNError, ValueError):
    """Malformed binary stream: model file or CIFAR-10 batch."""

    def __init__(self, message, offset=None, record=None):
        super().__init__(message)
        self.offset = offset
        self.record = record


class ParseError(ConeNNError, ValueError):
    """Non-numeric cell in a CSV dataset."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class NoBoundaryError(ConeNNError, ValueError):
    """Activation kind that is never zero, so a neuron has no decision boundary."""


class TrainingDivergedError(ConeNNError, ArithmeticError):
    """Non-finite loss or gradient met during training."""

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer
