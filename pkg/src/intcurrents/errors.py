"""Exception types shared by the package.

Everything derives from :class:`InputError` or :class:`GeometryError` so the
command line can map "could not run" failures onto a single exit code.
"""


class InputError(ValueError):
    """Malformed or inconsistent input (bad ids, wrong dimensions, mismatched complexes)."""


class UnsupportedDimensionError(InputError):
    pass


class GeometryError(InputError):
    """A geometric construction could not be carried out robustly."""


class RefinementError(GeometryError):
    """The target complex does not refine the image of a source simplex.

    Attributes
    ----------
    source_simplex : int
        Id of the offending source simplex.
    target_simplex : int or None
        A target simplex that straddles the image boundary, when one was found.
    """

    def __init__(self, message, source_simplex, target_simplex=None):
        super().__init__(message)
        self.source_simplex = source_simplex
        self.target_simplex = target_simplex


class DegenerateLevelError(GeometryError):
    def __init__(self, message, level):
        super().__init__(message)
        self.level = level


class HypothesisError(InputError):
    """A lemma was invoked on data that does not satisfy its hypotheses."""
