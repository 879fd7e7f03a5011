"""Exception hierarchy shared by all engine modules."""


class AutodidactError(Exception):
    """Base class for all engine errors."""

    code = "AutodidactError"

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.code)
        self.detail = detail or self.code


# --- backend errors ---

class BackendUnavailable(AutodidactError):
    code = "BackendUnavailable"


class BackendRejected(AutodidactError):
    code = "BackendRejected"


class BackendTimeout(AutodidactError):
    code = "Timeout"


# --- curriculum ---

class InvalidRoadmap(AutodidactError):
    code = "InvalidRoadmap"


class MalformedRoadmap(AutodidactError):
    code = "MalformedRoadmap"


class NodeLocked(AutodidactError):
    code = "NodeLocked"


class UnknownNode(AutodidactError):
    code = "UnknownNode"


# --- lesson pipeline ---

class MalformedSlide(AutodidactError):
    code = "MalformedSlide"


class OverlongSummary(AutodidactError):
    code = "OverlongSummary"


class AlreadyFrozen(AutodidactError):
    code = "AlreadyFrozen"


class StorageFailure(AutodidactError):
    code = "StorageFailure"


class DeckMissing(AutodidactError):
    code = "DeckMissing"


class UnsupportedFormat(AutodidactError):
    code = "UnsupportedFormat"


# --- tutor session ---

class NotPlaying(AutodidactError):
    code = "NotPlaying"


class InvalidTransition(AutodidactError):
    code = "InvalidTransition"


class EmptyQuestion(AutodidactError):
    code = "EmptyQuestion"


# --- retrieval / datasets ---

class BadWindow(AutodidactError):
    code = "BadWindow"


class DimensionMismatch(AutodidactError):
    code = "DimensionMismatch"


class NotEnoughDistractors(AutodidactError):
    code = "NotEnoughDistractors"


class BadRatios(AutodidactError):
    code = "BadRatios"


# --- assessment ---

class MalformedQuiz(AutodidactError):
    code = "MalformedQuiz"


class LengthMismatch(AutodidactError):
    code = "LengthMismatch"


class CourseIncomplete(AutodidactError):
    code = "CourseIncomplete"


class EmptyAnswer(AutodidactError):
    code = "EmptyAnswer"


# --- metrics ---

class ZeroVector(AutodidactError):
    code = "ZeroVector"


class EmptyInput(AutodidactError):
    code = "EmptyInput"
