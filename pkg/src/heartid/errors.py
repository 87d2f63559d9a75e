"""Exception types raised across the pipeline.

Everything deriving from :class:`PipelineError` is a data/validation problem
(the CLI maps these to exit code 2); unexpected internal failures propagate
as ordinary exceptions.
"""


class PipelineError(Exception):
    """Base class for input-validation and data errors."""


# --- series / STFT ---------------------------------------------------------

class SeriesTooShort(PipelineError):
    pass


class ZeroSample(PipelineError):
    pass


class WindowTooLong(PipelineError):
    pass


class InvalidHop(PipelineError):
    pass


# --- filter bank / cepstra -------------------------------------------------

class IndexOutOfRange(PipelineError):
    pass


class AxisMismatch(PipelineError):
    pass


class EmptyInput(PipelineError):
    pass


class KPrimeTooLarge(PipelineError):
    pass


class KindMismatch(PipelineError):
    pass


class DimensionMismatch(PipelineError):
    pass


# --- radar front end -------------------------------------------------------

class DegenerateCube(PipelineError):
    pass


class EmptyGrid(PipelineError):
    pass


class EmptyWindow(PipelineError):
    pass


# --- synthesis -------------------------------------------------------------

class InvalidDuration(PipelineError):
    pass


class ScheduleEmpty(PipelineError):
    pass


class NonDivisibleLength(PipelineError):
    pass


class InvalidProfile(PipelineError):
    pass


# --- classification --------------------------------------------------------

class TooFewRows(PipelineError):
    pass


class SingleClass(PipelineError):
    pass


class TooFewSessions(PipelineError):
    pass


class DimMismatch(PipelineError):
    pass


class LengthMismatch(PipelineError):
    pass


class NoConvergence(UserWarning):
    """Solver hit its iteration budget before meeting the KKT tolerance.

    Issued as a warning, not an error: the partially optimized machine is
    still returned (and flagged), so evaluation runs are never aborted by a
    hard training instance.
    """


# --- embedding -------------------------------------------------------------

class DegenerateInput(PipelineError):
    pass


class PerplexityTooLarge(PipelineError):
    pass


# --- file formats ----------------------------------------------------------

class ManifestError(PipelineError):
    pass


class IoError(PipelineError):
    pass
