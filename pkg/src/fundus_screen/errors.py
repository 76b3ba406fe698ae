"""Exception types shared across the pipeline."""


class FundusScreenError(Exception):
    """Base class for all pipeline errors."""


class ImageFormatError(FundusScreenError):
    """Input file is not an 8-bit RGB raster."""


class MaskEncodingError(FundusScreenError):
    """Mask file contains a pixel value outside {0, 128, 255}."""


class StratificationError(FundusScreenError):
    """A class has too few members to stratify across splits."""


class ClaheParameterError(FundusScreenError):
    """CLAHE tile grid does not fit the image."""


class ModelConfigError(FundusScreenError):
    """Network channel schedule or preset is inconsistent."""


class EnsembleContractError(FundusScreenError):
    """Model input channels do not match the supplied stack."""


class NoDetectionError(FundusScreenError):
    """A class mask is empty; nothing to fit an ellipse to."""


class CdrUndefinedError(FundusScreenError):
    """Cup lies entirely outside the disc; CDR cannot be computed."""


class WeightLoadError(FundusScreenError):
    """External weight file does not match the backbone shape manifest."""


class ScreenError(FundusScreenError):
    """Screening failed; carries the upstream cause."""


class UndefinedMetricError(FundusScreenError):
    """Metric is undefined for the given inputs (e.g. one class absent)."""


class ConfigError(FundusScreenError):
    """Pipeline config file contains unknown keys or bad values."""
