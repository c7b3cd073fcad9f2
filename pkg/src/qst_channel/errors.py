"""Exception hierarchy shared by the library and the command line."""


class QSTChannelError(Exception):
    """Base class for every error raised by :mod:`qst_channel`."""


class ParameterError(QSTChannelError, ValueError):
    """Invalid model parameters, time grids or configuration values."""


class NumericalError(QSTChannelError, ArithmeticError):
    """A numerical routine (eigensolver, root search) failed."""


class PoleCollisionError(NumericalError):
    """A resolvent was evaluated on top of an unperturbed channel energy."""

    def __init__(self, message, energy):
        super().__init__(message)
        self.energy = energy


class BracketError(NumericalError):
    """A root bracket did not show the expected sign change."""

    def __init__(self, message, interval):
        super().__init__(message)
        self.interval = interval


class CompletenessError(NumericalError):
    """Residue weights do not reproduce the initial condition."""


class RegimeError(QSTChannelError, ValueError):
    """A closed-form predictor was asked for parameters outside its regime."""
