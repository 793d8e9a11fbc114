"""Exception hierarchy for gstab.

Every error raised by the library derives from ``GstabError``; the CLI maps
the class name (minus the ``Error`` suffix) to a machine-parseable code.
"""


class GstabError(Exception):
    """Base class for all gstab errors."""

    @classmethod
    def code(cls) -> str:
        name = cls.__name__
        return name[:-5] if name.endswith("Error") else name


class NonFiniteError(GstabError):
    pass


class ZeroNormRowError(GstabError):
    pass


class ConstantRowError(GstabError):
    pass


class ConstantColumnError(GstabError):
    pass


class LengthMismatchError(GstabError):
    pass


class TooShortError(GstabError):
    pass


class DegenerateError(GstabError):
    pass


class RankTooHighError(GstabError):
    pass


class SingularCovarianceError(GstabError):
    pass


class TooFewFeaturesError(GstabError):
    pass


class TooFewSamplesError(GstabError):
    pass


class TooFewClassesError(GstabError):
    pass


class ClassTooSmallError(GstabError):
    pass


class ZeroTotalVarianceError(GstabError):
    pass


class EmptyWithinPairsError(GstabError):
    pass


class SingularWithinCovarianceError(GstabError):
    pass


class UnsupportedClassCountError(GstabError):
    pass


class ConditionTooSmallError(GstabError):
    pass


class TooFewConditionsError(GstabError):
    pass


class TooFewCellsError(GstabError):
    pass


class DegenerateShiftError(GstabError):
    pass


class ZeroCentroidError(GstabError):
    pass


class ZeroNormError(GstabError):
    pass


class DimMismatchError(GstabError):
    pass


class DegenerateBandwidthError(GstabError):
    pass


class ZeroSpectrumError(GstabError):
    pass


class ZeroFrobeniusError(GstabError):
    pass


class RowCountMismatchError(GstabError):
    pass


class AllReplicatesDegenerateError(GstabError):
    pass


class CollinearControlsError(GstabError):
    pass


class EmptySeriesError(GstabError):
    pass


class LevelMismatchError(GstabError):
    pass


class SingleClassError(GstabError):
    pass


class NoStablePointsError(GstabError):
    pass


class ZeroWeightsError(GstabError):
    pass


class RejectionExhaustedError(GstabError):
    pass


class SpecParseError(GstabError):
    pass


class LabelRequiredError(GstabError):
    pass


class ReferenceRequiredError(GstabError):
    pass


class InputFormatError(GstabError):
    pass


class UnknownMetricError(GstabError):
    pass
