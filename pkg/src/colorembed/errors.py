"""Exception hierarchy shared by every module."""


class ColorEmbedError(Exception):
    """Base class for all library errors."""


class GraphError(ColorEmbedError, ValueError):
    """Malformed graph, family, or vertex id."""


class CapExceeded(ColorEmbedError):
    """An exhaustive computation would exceed its configured cap."""


class PreconditionError(ColorEmbedError, ValueError):
    """A hypothesis required by an operation does not hold.

    ``condition`` names the failing inequality or clause so callers
    (and the CLI) can report it verbatim.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class TargetError(ColorEmbedError, ValueError):
    """A target graph or decomposition violates its invariants."""

    def __init__(self, message, clause=None):
        super().__init__(message)
        self.clause = clause


class EmbeddingError(ColorEmbedError):
    """An embedding is not injective or misses a host edge."""


class ExtensionError(ColorEmbedError):
    """No admissible extension exists (for example the candidate set is empty)."""


class SearchFailure(ExtensionError):
    """Evidence-grade search gave up; the caller may backtrack."""


class JoinednessViolation(ExtensionError):
    """A crossing edge promised by joinedness was not found."""

    def __init__(self, message, left=None, right=None):
        super().__init__(message)
        self.left = left
        self.right = right


class InternalInconsistency(ColorEmbedError):
    """Exact-mode search exhausted all candidates although its hypotheses held.

    Carries a state dump; this indicates a bug or an uncertified host.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
