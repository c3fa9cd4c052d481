"""Exception types shared across the package."""


class QIFSError(Exception):
    """Base class for all package errors."""


class DimensionError(QIFSError, ValueError):
    """Operands have incompatible Hilbert-space or grid dimensions."""


class InvalidStateError(QIFSError, ValueError):
    """A matrix fails the density-matrix or unitarity contract."""


class PreconditionError(QIFSError, ValueError):
    """An operation was called outside its domain."""


class ConvergenceError(QIFSError, RuntimeError):
    """An iterative or spectral solver failed to converge."""
