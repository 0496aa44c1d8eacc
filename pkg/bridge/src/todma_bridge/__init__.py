from .backend import BackendError, MarkovBackend, load_backend
from .server import handle_line, serve_stdio, serve_tcp, validate_request

__version__ = "0.1.0"
__all__ = ["BackendError", "MarkovBackend", "load_backend", "handle_line",
           "serve_stdio", "serve_tcp", "validate_request"]
