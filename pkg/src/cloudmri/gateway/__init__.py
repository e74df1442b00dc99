"""Front door of the system: REST API, CLI, content-addressed storage, and
the wiring of transport, reconstruction, scheduling, ledger, and monitoring
into one service."""

from cloudmri.gateway.config import GatewayConfig
from cloudmri.gateway.service import GatewayService

__all__ = ["GatewayConfig", "GatewayService"]
