"""Exception hierarchy shared by every fusepipe module."""


class FusepipeError(Exception):
    """Base class for all errors raised by this package."""


# --- image preprocessing ---

class EmptyMask(FusepipeError):
    """Binary mask has no set pixels; segmentation failed."""


# --- feature file I/O ---

class MalformedHeader(FusepipeError):
    pass


class RaggedRow(FusepipeError):
    pass


class NonFiniteValue(FusepipeError):
    pass


class DuplicateSampleId(FusepipeError):
    pass


class TooFewSamples(FusepipeError):
    pass


# --- transforms ---

class RankDeficient(FusepipeError):
    pass


class TooFewMinority(FusepipeError):
    pass


# --- classifiers ---

class ShapeMismatch(FusepipeError):
    pass


class SingleClass(FusepipeError):
    pass


class DegenerateWeights(FusepipeError):
    pass


class NoConvergence(FusepipeError):
    """Optimizer hit its iteration cap before reaching tolerance."""

    def __init__(self, message, kkt_violation=None):
        super().__init__(message)
        self.kkt_violation = kkt_violation


class UnknownKind(FusepipeError):
    pass


class ParamOutOfRange(FusepipeError):
    pass


# --- hyperparameter search ---

class EmptyList(FusepipeError):
    pass


class UnsatisfiableFolds(FusepipeError):
    pass


# --- ensembles and reports ---

class IncompleteReport(FusepipeError):
    pass


class RowMisalignment(FusepipeError):
    pass


class LengthMismatch(FusepipeError):
    pass


class EmptyInput(FusepipeError):
    pass


class LabelOutOfRange(FusepipeError):
    pass


# --- pipeline ---

class MissingArtifact(FusepipeError):
    """A pipeline stage's required upstream output is absent."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class ConfigInvalid(FusepipeError):
    pass
