"""Exception hierarchy shared by the pipeline stages."""


class VarsegError(Exception):
    """Base class for every error raised by varseg."""


class PGMError(VarsegError, ValueError):
    pass


class PGMFormatError(PGMError):
    """Unsupported or missing magic number."""


class PGMHeaderError(PGMError):
    """Malformed header token or maxval out of range."""


class PGMTruncationError(PGMError):
    """Sample count does not match the header dimensions."""


class ImageSizeError(VarsegError, ValueError):
    pass


class EmptyFieldError(VarsegError):
    """No pixel survived gradient thresholding."""


class DegeneracyError(VarsegError, ValueError):
    """Zero-length edge or a curve with vanishing varifold norm."""


class DivergenceError(VarsegError, ArithmeticError):
    """Non-finite values appeared during integration or optimization."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
