from .app import create_app
from .ops import Registry

__all__ = ["Registry", "create_app"]
