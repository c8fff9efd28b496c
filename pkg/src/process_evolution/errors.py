"""Domain errors raised by process-evolution.

Every failure that the CLI reports as a domain error (exit code 1) derives
from ProcessEvolutionError.
"""


class ProcessEvolutionError(Exception):
    """Base class for all domain errors."""


class InvalidTerm(ProcessEvolutionError, ValueError):
    """An IRI or literal violates the term invariants."""


class ParseError(ProcessEvolutionError):
    """A line-oriented document could not be parsed.

    Attributes:
        line_number: 1-based number of the offending line.
        message: Description of the problem.
        source: Optional file name the document was read from.
    """

    def __init__(self, line_number: int, message: str, source: str | None = None):
        self.line_number = line_number
        self.message = message
        self.source = source
        super().__init__(str(self))

    def __str__(self) -> str:
        where = f"{self.source}:" if self.source else "line "
        return f"{where}{self.line_number}: {self.message}"


class InvalidProcessXml(ProcessEvolutionError):
    """A process description cannot be converted into a graph."""


class XmlSyntaxError(InvalidProcessXml):
    """The XML document is not well-formed."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        super().__init__(message if line_number is None else f"line {line_number}: {message}")


class DuplicateEntityId(InvalidProcessXml):
    """Two entities of one document share an id."""


class InvalidSchema(ProcessEvolutionError):
    """A process schema violates its invariants."""


class MissingCorpus(ProcessEvolutionError):
    """The corpus directory is absent or holds no version files."""


class MetadataMismatch(ProcessEvolutionError):
    """The metadata table references a version file that does not exist."""


class NonMonotonicVersion(ProcessEvolutionError):
    """A commit would not increase the version number."""


class DuplicateVersion(NonMonotonicVersion):
    """A commit reuses an existing version number."""


class UnknownVersion(ProcessEvolutionError):
    """A version number is not stored in the repository."""


class BaseMismatch(ProcessEvolutionError):
    """A comparison model is applied to a graph it was not computed against."""


class MalformedQuery(ProcessEvolutionError):
    """A query is syntactically or structurally invalid."""


class LabelConstraintOnPlainGraph(MalformedQuery):
    """A label-constrained pattern was evaluated against a plain graph."""


class MalformedChangeGraph(ProcessEvolutionError):
    """A graph does not decode into valid change records."""


class MissingChangeRecords(ProcessEvolutionError):
    """Change detection has not been run on the repository."""


class MissingTimestamps(ProcessEvolutionError):
    """A calendar-time metric needs timestamps that some versions lack."""


class UnknownModule(ProcessEvolutionError):
    """No stored version contains the requested process module."""


class EmptySeries(ProcessEvolutionError):
    """A plot was requested for data without any point."""


class InvalidConfig(ProcessEvolutionError):
    """A configuration file or value is invalid."""


class MissingRepository(ProcessEvolutionError):
    """No version repository exists at the given location."""
