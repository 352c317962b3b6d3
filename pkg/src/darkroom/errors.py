"""Exception taxonomy shared by the engine, the CLI and the HTTP service."""


class DarkroomError(Exception):
    """Base class for all errors raised by this package."""


class MeshError(DarkroomError):
    """Invalid mesh data (bad indices, mismatched scalar fields, empty mesh)."""


class CameraError(DarkroomError):
    """Invalid camera or sampling-grid configuration."""


class DatabaseError(DarkroomError):
    """Image-database layout or container problems (bad CSV, bad .gbuf)."""


class DatabaseParseError(DatabaseError):
    """Malformed index CSV; carries the offending row number."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DanglingReferenceError(DatabaseError):
    """Index references a buffer file that does not exist."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class PipelineError(DarkroomError):
    """Base class for filter-graph validation and execution errors."""


class UnknownFilterError(PipelineError):
    pass


class PortTypeError(PipelineError):
    pass


class CycleError(PipelineError):
    def __init__(self, message, from_endpoint=None, to_endpoint=None):
        super().__init__(message)
        self.from_endpoint = from_endpoint
        self.to_endpoint = to_endpoint


class ParamError(PipelineError):
    pass


class UnconnectedInputError(PipelineError):
    def __init__(self, message, node=None, port=None):
        super().__init__(message)
        self.node = node
        self.port = port


class SchemaError(PipelineError):
    """Pipeline JSON payload violates the serialization schema."""

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer
