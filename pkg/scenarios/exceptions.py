"""
Scenario errors. All of them are found before a run starts.
"""
from core.exceptions import FarmValidationError


class ScenarioSyntaxError(FarmValidationError):
    """The text does not follow the grammar; parsing stops at the first error."""

    default_code = 'syntax'

    def __init__(self, line, column, expected=(), message=None):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(expected))
        if message is None:
            message = "Unexpected input"
            if self.expected:
                message = f"{message}; expected one of: {', '.join(self.expected)}"
        super().__init__(f"Syntax error at line {line}, column {column}: {message}", element=f"{line}:{column}")


class DuplicateBlockName(FarmValidationError):
    """Two farms or two workloads share a name, or a singleton block repeats."""

    default_code = 'duplicate_block'


class UnresolvedReference(FarmValidationError):
    """A workload target or an inject path names something the farms do not declare."""

    default_code = 'unresolved_reference'
