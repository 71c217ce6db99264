"""Exception hierarchy shared by all gridplan modules."""

from __future__ import annotations


class GridplanError(Exception):
    """Base class for every error raised by gridplan."""


# scene graph
class SceneGraphError(GridplanError):
    pass


class SchemaError(SceneGraphError):
    """Malformed field or wrong type in a scene-graph document."""


class SceneReferenceError(SceneGraphError):
    """A constraint references a room or furniture id that does not exist."""


class CapacityError(SceneGraphError):
    """Requested areas do not fit in the available space."""


# grid
class OutOfBounds(GridplanError):
    pass


# model building
class BuildError(GridplanError):
    pass


class CornerOutdoor(GridplanError):
    pass


# solving
class SolverError(GridplanError):
    pass


class SolverNotFound(SolverError):
    pass


class SolverCrashed(SolverError):
    pass


class ParseError(SolverError):
    pass


class BudgetExceeded(SolverError):
    pass


# coarse-to-fine
class DegenerateGrid(GridplanError):
    pass


# postprocess / metrics
class NoCandidate(GridplanError):
    """No legal door location for a closed room; indicates an upstream bug."""


class MissingRoom(GridplanError):
    pass


# llm frontend
class ApiError(GridplanError):
    pass


class StageSchemaError(GridplanError):
    pass


class ConflictError(GridplanError):
    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])
