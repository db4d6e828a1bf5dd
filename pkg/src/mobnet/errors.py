"""Exception hierarchy shared across the package."""


class MobnetError(Exception):
    """Base class; carries enough context for the CLI error report."""

    module = "mobnet"
    operation = ""

    def __init__(self, message, operation=""):
        super().__init__(message)
        if operation:
            self.operation = operation


class SelfLoopError(MobnetError):
    module = "graph"

    def __init__(self, node):
        super().__init__(f"self-loop at node {node} is not allowed")
        self.node = node


class NodeOutOfRangeError(MobnetError):
    module = "graph"


class SelfDyadError(MobnetError):
    module = "graph"

    def __init__(self, node):
        super().__init__(f"dyad ({node}, {node}) is not a valid ordered pair")
        self.node = node


class TooFewNodesError(MobnetError):
    module = "graph"


class NegativeDecayError(MobnetError):
    module = "terms"

    def __init__(self, decay):
        super().__init__(f"decay must be >= 0, got {decay}")
        self.decay = decay


class BaseLevelError(MobnetError):
    """Factor terms must not use the omitted base category."""

    module = "terms"


class ModelFileError(MobnetError):
    """Model specification file failed to parse or validate."""

    module = "terms"


class DimensionMismatchError(MobnetError):
    module = "sampler"


class SeparationError(MobnetError):
    """Logistic regression drifted to infinity; data are separable."""

    module = "estimator"

    def __init__(self, term_label):
        super().__init__(
            f"perfect separation detected while fitting; offending term: {term_label}"
        )
        self.term_label = term_label


class SingularModelError(MobnetError):
    """Information matrix is singular (collinear or constant terms)."""

    module = "estimator"


class DegenerateModelError(MobnetError):
    module = "estimator"


class NonConvergenceError(MobnetError):
    module = "estimator"


class InsufficientDataError(MobnetError):
    module = "ingest"


class UnknownTimestampError(MobnetError):
    module = "ingest"

    def __init__(self, value, line_number):
        super().__init__(f"unparseable timestamp {value!r} at line {line_number}")
        self.line_number = line_number
