"""Shadowing, specification and recurrence toolkit for shifts of finite type,
odometers and their finite products."""

from .errors import ShadowdynError, InputError
from .systems import SFT, Odometer, Product, UPPoint, ApproxPoint, OdometerPoint, ProductPoint

__version__ = "0.1.0"

__all__ = [
    "SFT", "Odometer", "Product", "UPPoint", "ApproxPoint", "OdometerPoint", "ProductPoint",
    "ShadowdynError", "InputError", "__version__",
]
