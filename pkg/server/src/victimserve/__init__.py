from .app import create_app
from .backends import ServedModel, mock_model, transformer_model

__version__ = "0.1.0"

__all__ = ["create_app", "ServedModel", "mock_model", "transformer_model",
           "__version__"]
