"""Mining parallel paragraph pairs from binned bilingual document collections."""
from .config import RunConfig

__version__ = "0.1.0"
__all__ = ["RunConfig", "__version__"]
