"""HTTP facade of the MEC secure clustering service."""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from slowapi import _rate_limit_exceeded_handler
from slowapi.errors import RateLimitExceeded

from app import __version__
from app.config import settings
from app.dependencies import limiter
from app.exceptions import SecureClusterError
from app.routers import health, mec
from app.services.mec_service import mec_service

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper()),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan events."""
    logger.info("Starting up secure cluster service...")
    if settings.mec_registry_file:
        mec_service.load_registry(settings.mec_registry_file)
    yield
    logger.info("Shutting down secure cluster service...")
    if settings.mec_registry_file:
        mec_service.save_registry(settings.mec_registry_file)
    logger.info("Cleanup complete")


TAGS_METADATA = [
    {
        "name": "mec",
        "description": "Vehicle registration, VSC announcements and secure cluster formation",
    },
    {
        "name": "health",
        "description": "Health and readiness checks",
    },
]

DESCRIPTION = """
MEC-hosted secure clustering service for vehicle-to-vehicle broadcast.

**Flow:**
- Register each vehicle's VIN once (the VIN stays in the MEC registry)
- Vehicles announce their vehicular secrecy capacity with a hash chain disclosure
- A host requests a cluster and receives the members' hash chain information

The same operations are served as newline-delimited JSON over TCP by
`secure-cluster serve`.
"""

app = FastAPI(
    title="Secure Cluster MEC API",
    description=DESCRIPTION,
    version=__version__,
    docs_url=None,
    redoc_url="/docs",
    openapi_url="/openapi.json",
    lifespan=lifespan,
    openapi_tags=TAGS_METADATA,
    license_info={
        "name": "MIT",
        "url": "https://opensource.org/licenses/MIT",
    },
)

# Add rate limiter
app.state.limiter = limiter
app.add_exception_handler(RateLimitExceeded, _rate_limit_exceeded_handler)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["*"],
)

app.include_router(health.router)
app.include_router(mec.router)


@app.exception_handler(SecureClusterError)
async def secure_cluster_exception_handler(request: Request, exc: SecureClusterError):
    """Protocol errors become 4xx envelopes."""
    return JSONResponse(
        status_code=exc.status,
        content={"error": exc.code, "message": str(exc), "status": exc.status},
    )


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Global exception handler."""
    logger.error(f"Unhandled exception: {exc}", exc_info=True)
    return JSONResponse(
        status_code=500,
        content={
            "error": "internal_error",
            "message": "An unexpected error occurred",
            "status": 500,
        },
    )
