from .app import create_app
from .ops import EngineOps

__all__ = ["create_app", "EngineOps"]
