"""Exception hierarchy.

Input problems (bad geometry, bad arguments, unreadable files) derive from
:class:`InputError`; numerical failures (singular systems, degenerate
sections) derive from :class:`NumericalError`. The CLI maps the two families
to exit codes 2 and 3.
"""


class MocapError(Exception):
    """Base class for all errors raised by this package."""


class InputError(MocapError, ValueError):
    pass


class NumericalError(MocapError, ArithmeticError):
    pass


class BehindCamera(InputError):
    pass


class DegenerateDirection(InputError):
    pass


class InvalidRotation(InputError):
    pass


class InsufficientObservations(InputError):
    pass


class LimitModeHasNoCovariance(InputError):
    pass


class NoVisiblePair(InputError):
    pass


class NotEnoughCameras(InputError):
    pass


class ScenarioFileError(InputError):
    pass


class SingularCovariance(NumericalError):
    pass


class SingularInformation(NumericalError):
    pass


class DegenerateGeometry(NumericalError):
    pass


class DegenerateSection(NumericalError):
    pass


class TooFewValidTrials(NumericalError):
    pass


class ZeroTheory(NumericalError):
    pass
