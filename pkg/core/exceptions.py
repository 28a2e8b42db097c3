"""
Exception bases shared by every simulator app.

Static problems (a scenario that does not parse, a topology that does not
validate) are ``ValidationError`` subclasses so they read like any other
Django validation failure. Problems that only show up while a simulation
runs derive from ``SimulationError``.
"""
from django.core.exceptions import ValidationError


class FarmValidationError(ValidationError):
    """
    Base class for scenario and topology validation failures.

    ``element`` names the offending block, service, node or path so that the
    message can be traced back to the input.
    """

    default_code = 'invalid'

    def __init__(self, message, element=None, code=None):
        self.element = element
        super().__init__(message, code=code or self.default_code, params={'element': element})

    def __str__(self):
        return self.message


class SimulationError(Exception):
    """Base class for errors raised while a simulation is running."""
    pass


class MetricsError(ValueError):
    """Base class for metric queries whose preconditions do not hold."""
    pass
