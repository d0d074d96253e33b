"""HTTP service and the request handlers it shares with the CLI."""

from .handlers import HANDLERS, ServiceError, dispatch
from .schemas import Report, Table

__all__ = ["HANDLERS", "Report", "ServiceError", "Table", "dispatch"]
