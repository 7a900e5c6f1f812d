"""Exception hierarchy shared across the library.

``MeshError`` subclasses signal bad input (CLI exit code 2), ``NumericalError``
subclasses signal solver or conditioning failures (CLI exit code 3).
"""


class SymmapError(Exception):
    """Base class for all library-specific failures."""


class MeshError(SymmapError):
    """Invalid mesh input, mesh file, or field attached to a mesh."""


class ParseError(MeshError):
    """Malformed or unreadable mesh file, or out-of-range face index."""


class NonManifold(MeshError):
    """An edge borders more than two faces, or orientation cannot be made consistent."""


class Disconnected(MeshError):
    """The mesh has more than one connected component (or isolated vertices)."""


class DegenerateFace(MeshError):
    """A face repeats a vertex or has (near-)zero area."""


class InvalidSpec(MeshError):
    """Bad parameters passed to a primitive generator or writer."""


class LengthMismatch(MeshError):
    """A per-vertex field does not match the vertex count."""


class NumericalError(SymmapError):
    """Numerical failure inside a solver or spectral computation."""


class NumericalDegeneracy(NumericalError):
    """Cotangent weights overflowed because of a near-zero triangle angle."""


class ConvergenceFailure(NumericalError):
    """The iterative eigensolver exhausted its iteration budget."""


class InsufficientRank(NumericalError):
    """Requested more eigenpairs than the operator can provide."""


class ZeroEigenvalueDivision(NumericalError):
    """A nonconstant eigenvalue underflowed to zero; spectral distances undefined."""


class DegenerateSpectrum(NumericalError):
    """Spectrum too narrow to place the requested descriptor bands."""


class RankDeficient(NumericalError):
    """Fewer independent constraints than unknowns in a map estimation."""


class EmptyRegion(SymmapError):
    """A region extraction produced no vertices."""


class DimensionMismatch(SymmapError):
    """Matrix dimensions of two objects do not agree."""


class TooFewMaps(SymmapError):
    """Fewer maps than requested clusters."""
