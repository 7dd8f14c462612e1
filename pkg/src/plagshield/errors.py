"""Exception hierarchy shared across the toolkit."""


class PlagshieldError(Exception):
    """Base class for all toolkit errors."""


class MiniLangSyntaxError(PlagshieldError):
    """Raised by the lexer/parser; carries position and expectation info."""

    def __init__(self, message, line, column, expected=()):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.expected = tuple(expected)


class MiniLangRuntimeError(PlagshieldError):
    """Runtime failure while interpreting a program (division by zero, unbound variable)."""


class InputExhausted(MiniLangRuntimeError):
    """read() was called but the stdin vector is empty."""


class StepBudgetExceeded(PlagshieldError):
    """Interpreter exceeded its configured execution step budget."""


class ImportFormatError(PlagshieldError):
    """Malformed token-stream file."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateProgramId(PlagshieldError):
    """Two programs in a corpus share the same identifier."""


class MissingSemantics(PlagshieldError):
    """TSN requested on a sequence that carries no statement groups."""


class TsnUnavailableWarning(UserWarning):
    """TSN was requested but the input has no semantics; comparison proceeds without it."""


class CycleDetected(PlagshieldError):
    """Defensive: topological sort found a cycle in a normalization graph."""


class OverlappingMatches(PlagshieldError):
    """Match list violates the pairwise non-overlap contract."""


class BehaviorChanged(PlagshieldError):
    """An attack transformation failed the interpreter-equivalence battery; output must not be emitted."""


class EndpointError(PlagshieldError):
    """Transport or authentication failure talking to a chat-completion endpoint."""


class QuotaExceeded(EndpointError):
    """Endpoint signalled rate-limit/quota exhaustion."""


class EmptyInput(PlagshieldError):
    """A statistics operation received an empty value list."""


class EmptyCorpus(PlagshieldError):
    """Corpus directory contained no usable submissions."""


class MissingArtifacts(PlagshieldError):
    """An evaluation stage requires artifacts that are not present."""

    def __init__(self, message, hint=""):
        super().__init__(message + (f" (hint: {hint})" if hint else ""))
        self.hint = hint
