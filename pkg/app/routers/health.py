"""Health check endpoints."""

from datetime import datetime, timezone

from fastapi import APIRouter, Depends, Request
from fastapi.responses import JSONResponse

from app import __version__
from app.dependencies import get_mec_service
from app.models.responses import HealthResponse, ReadinessResponse
from app.services.mec_service import MecService

router = APIRouter(
    tags=["health"],
)


@router.get(
    "/health",
    response_model=HealthResponse,
    summary="Health check",
    description="""
    Returns the API status with the registry size and the number of live clusters.

    ## Use Cases

    - Load balancer health checks
    - Monitoring dashboards
    """,
)
async def health_check(request: Request, service: MecService = Depends(get_mec_service)):
    """Health check endpoint."""
    return JSONResponse(
        content={
            "status": "healthy",
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "version": __version__,
            "registered": service.registry_size,
            "live_clusters": service.live_clusters,
        }
    )


@router.get(
    "/ready",
    response_model=ReadinessResponse,
    summary="Readiness check",
    description="Returns 200 once the application has finished initialization.",
)
async def readiness_check(request: Request):
    """Readiness check for Docker healthcheck."""
    return JSONResponse(content={"ready": True})
