"""Response models of the HTTP facade."""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field


class WireResponse(BaseModel):
    """Envelope shared with the socket protocol."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "status": "rejected",
                "body": {"reason": "bad_disclosure"},
            }
        }
    )

    status: str = Field(
        ...,
        description="ok, accepted, rejected, degenerate or host_below_threshold",
    )
    body: dict[str, Any] = Field(default_factory=dict, description="Op-specific payload")


class ErrorResponse(BaseModel):
    """Standard error response.

    Error codes mirror ``app.exceptions``: ``validation_error``, ``conflict``,
    ``unknown_host``, ``not_found``, ``expired``, ``rate_limit_exceeded``,
    ``internal_error``.
    """

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "error": "unknown_host",
                "message": "host 9f2c4e1a7b3d5c60 is not registered",
                "status": 404,
            }
        }
    )

    error: str = Field(..., description="Error code")
    message: str = Field(..., description="Human-readable error message")
    status: int = Field(..., description="HTTP status code")


class HealthResponse(BaseModel):
    """Health check response."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "status": "healthy",
                "timestamp": "2026-02-16T08:30:00Z",
                "version": "0.3.0",
                "registered": 10,
                "live_clusters": 1,
            }
        }
    )

    status: str = Field(..., description="API status")
    timestamp: str = Field(..., description="ISO 8601 timestamp of the check")
    version: str = Field(..., description="API version")
    registered: int = Field(..., description="Vehicles in the registry")
    live_clusters: int = Field(..., description="Clusters not yet expired")


class ReadinessResponse(BaseModel):
    """Readiness check response for Docker healthchecks."""

    ready: bool = Field(..., description="Whether the API is ready to serve requests")
