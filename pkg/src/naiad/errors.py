"""Shared exception hierarchy.

Every domain error raised by the engine derives from NaiadError so callers
(CLI, gateway) can map failures to exit codes / HTTP statuses uniformly.
"""


class NaiadError(Exception):
    """Base class for all engine errors."""


# --- tool registry ---------------------------------------------------------

class DuplicateName(NaiadError):
    pass


class InvalidDescriptor(NaiadError):
    pass


class UnknownTool(NaiadError):
    pass


# --- planning ---------------------------------------------------------------

class EmptyQuery(NaiadError):
    pass


class ProviderFailure(NaiadError):
    pass


class UnparseableExtraction(NaiadError):
    pass


class UnknownWaterBody(NaiadError):
    pass


class UnparseablePlan(NaiadError):
    pass


class PlanningExhausted(NaiadError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# --- workflow ----------------------------------------------------------------

class NotValidated(NaiadError):
    pass


class UnskippableUnavailable(NaiadError):
    pass


# --- executor ----------------------------------------------------------------

class PreconditionViolation(NaiadError):
    pass


# --- knowledge ----------------------------------------------------------------

class DuplicateId(NaiadError):
    pass


class EmbedderFailure(NaiadError):
    pass


class UnknownTank(NaiadError):
    pass


# --- aquatools ----------------------------------------------------------------

class CatalogUnavailable(NaiadError):
    pass


class InvalidWindow(NaiadError):
    pass


class DegenerateAoi(NaiadError):
    pass


class MissingBand(NaiadError):
    pass


class ShapeMismatch(NaiadError):
    pass


class NoOverlap(NaiadError):
    pass


class AllNodata(NaiadError):
    pass


class OutOfRangeNdci(NaiadError):
    pass


class ServiceUnavailable(NaiadError):
    pass


class InvalidCoordinates(NaiadError):
    pass


# --- reporting -----------------------------------------------------------------

class EmptyTrace(NaiadError):
    pass


class UnparseableVerdict(NaiadError):
    pass


class RevisionExhausted(NaiadError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class StorageFailure(NaiadError):
    pass


# --- evaluation ------------------------------------------------------------------

class ParseError(NaiadError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class EmptyDataset(NaiadError):
    pass


class EmptyInput(NaiadError):
    pass


class RunMismatch(NaiadError):
    pass


# --- gateway -----------------------------------------------------------------------

class ConfigInvalid(NaiadError):
    pass


class PortInUse(NaiadError):
    pass
