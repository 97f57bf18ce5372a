"""dfdetect: shot-aware ensemble DeepFake detection service and pipeline."""

from .version import SERVICE_VERSION, ServiceVersion

__version__ = str(SERVICE_VERSION)

__all__ = ["SERVICE_VERSION", "ServiceVersion", "__version__"]
