class ConfigError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class IntegrityError(RuntimeError):
    """The inclusion index disagrees with itself or with the bank."""


class DatasetFormatError(ValueError):
    pass


class ChecksumError(DatasetFormatError):
    pass
