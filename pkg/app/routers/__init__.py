"""API routers for the MEC clustering service."""

from app.routers.health import router as health_router
from app.routers.mec import router as mec_router

__all__ = ["health_router", "mec_router"]
