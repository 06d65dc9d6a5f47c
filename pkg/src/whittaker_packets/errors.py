"""Exception hierarchy shared by the numerical modules and the CLI."""

from __future__ import annotations


class WhittakerError(Exception):
    """Base class for all library errors."""

    #: process exit code used by the command-line interface
    exit_code = 1


class DomainError(WhittakerError, ValueError):
    """An argument lies outside the domain where the model is defined."""

    exit_code = 2


class QuadratureNonConvergence(WhittakerError, ArithmeticError):
    """A quadrature did not reach its tolerance within the refinement budget.

    Parameters
    ----------
    message : str
        Human readable description.
    error_estimate : float, optional
        Last available error estimate (relative units).
    """

    exit_code = 3

    def __init__(self, message: str, error_estimate: float = float("nan")):
        super().__init__(message)
        self.error_estimate = error_estimate


class InsufficientPeaks(WhittakerError):
    """Too few envelope maxima were found to fit an envelope."""

    exit_code = 3


class FitFailure(WhittakerError):
    """A least-squares fit is too poor to be trusted."""

    exit_code = 3


class RankDeficient(WhittakerError, ValueError):
    """The regression design matrix is singular."""

    exit_code = 2


class NodeLost(WhittakerError):
    """A tracked density node merged with neighbouring structure.

    Attributes
    ----------
    merge_time : float
        First time [fs] at which the node no longer qualified.
    times, values : numpy.ndarray
        Part of the lifting curve recorded before the loss.
    """

    exit_code = 3

    def __init__(self, merge_time: float, times=None, values=None):
        super().__init__(f"node lost at t = {merge_time:.6g} fs")
        self.merge_time = merge_time
        self.times = times
        self.values = values
