"""Exception hierarchy shared across the solver pipeline.

Each stage of a run maps to one exception family so the CLI can translate
failures into stable exit codes.
"""


class CableFemError(Exception):
    """Base class for all cablefem errors."""


class ConfigError(CableFemError):
    """Invalid or inconsistent run configuration."""

    exit_code = 10


class MeshError(CableFemError):
    """Mesh ingestion, generation, or validation failure."""

    exit_code = 20


class MshParseError(MeshError):
    """Malformed MSH input; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SingularSystemError(CableFemError):
    """The assembled system is structurally or numerically singular."""

    exit_code = 30


class SolverToleranceError(CableFemError):
    """The linear solver could not reach the requested residual."""

    exit_code = 40
