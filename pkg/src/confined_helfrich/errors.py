"""Exception types raised across the package."""

from __future__ import annotations


class HelfrichError(Exception):
    """Base class for all package errors."""


class MeshError(HelfrichError, ValueError):
    """Invalid mesh input."""


class NonManifoldEdge(MeshError):
    pass


class InconsistentOrientation(MeshError):
    pass


class DegenerateFace(MeshError):
    pass


class NeckTooLarge(MeshError):
    pass


class NearDegenerateTriangle(HelfrichError, FloatingPointError):
    """Cotangent weights blow up on a nearly collapsed triangle."""


class OutsideTubularNeighborhood(HelfrichError, ValueError):
    pass


class DegenerateMesh(HelfrichError):
    """Mesh quality collapsed during optimization."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class InfeasibleStart(HelfrichError, ValueError):
    pass


class RankDeficientContactSet(HelfrichError):
    pass


class EvaluationAtBranchPoint(HelfrichError, ValueError):
    pass


class QuadratureNonConvergence(HelfrichError):
    pass


class FitDegenerate(HelfrichError):
    pass


class UsageError(HelfrichError):
    """Bad command line or run-config input; the message names the field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ParseError(HelfrichError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NonTriangleFace(ParseError):
    pass


class IoError(HelfrichError, OSError):
    """Report or sweep output could not be written."""
