"""Exception hierarchy shared by every module in the package."""


class FsitmError(Exception):
    """Base class for all errors raised by this package."""


class ImageFormatError(FsitmError):
    pass


class MalformedHeader(ImageFormatError):
    pass


class TruncatedPayload(ImageFormatError):
    pass


class UnsupportedFormat(ImageFormatError):
    pass


class UnsupportedBitDepth(ImageFormatError):
    pass


class InvalidImage(FsitmError, ValueError):
    """A raster violates a size, finiteness or range invariant."""


class AllZeroPlane(FsitmError, ValueError):
    pass


class DimensionMismatch(FsitmError, ValueError):
    pass


class BankTooLargeForImage(FsitmError, ValueError):
    pass


class InvalidParameter(FsitmError, ValueError):
    pass


class OutOfRangeInput(FsitmError, ValueError):
    pass


class LevelTooHigh(FsitmError, ValueError):
    pass


class LengthMismatch(FsitmError, ValueError):
    pass


class DegenerateInput(FsitmError, ValueError):
    """Rank correlation is undefined because one input is constant."""


class ManifestError(FsitmError):
    pass
