# flake8: noqa

from .version import __version__
from . import config
from .config import options, configure, describe_options
from .util import (
    ProvHuntError, ConfigError, SchemaError, ParseError, CapacityError,
    NumericalError
)

__all__ = [
    "config", "options", "configure", "describe_options", "ProvHuntError",
    "ConfigError", "SchemaError", "ParseError", "CapacityError",
    "NumericalError", "__version__"
]
