"""Exception types raised across the package."""


class EnhanceError(Exception):
    """Base class for all package errors."""


class ImageIOError(EnhanceError):
    pass


class UnsupportedFormat(ImageIOError):
    pass


class CorruptFile(ImageIOError):
    pass


class MultiChannelInput(ImageIOError):
    pass


class IoFailure(ImageIOError):
    pass


class InvalidImage(EnhanceError, ValueError):
    """Image data violates a value-domain or finiteness invariant."""


class ShapeMismatch(EnhanceError, ValueError):
    pass


class MarkerExceedsMask(EnhanceError, ValueError):
    pass


class MarkerBelowMask(EnhanceError, ValueError):
    pass


class ConfigError(EnhanceError):
    pass


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    def __init__(self, key: str, lineno: int | None = None):
        where = f" (line {lineno})" if lineno is not None else ""
        super().__init__(f"unknown config key {key!r}{where}")
        self.key = key


class InvalidValue(ConfigError):
    pass
