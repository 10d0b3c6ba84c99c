"""HTTP surfaces for the services and the clients that consume them."""

from .http import ServiceServer, start_server
from .clients import RepositoryClient

__all__ = ["RepositoryClient", "ServiceServer", "start_server"]
