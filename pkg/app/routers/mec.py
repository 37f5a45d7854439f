"""HTTP facade of the MEC clustering service.

Request and response bodies are the JSON of the socket protocol, without the
``op`` field (the route names the op).
"""

from typing import Any

from fastapi import APIRouter, Body, Depends, Request
from fastapi.responses import JSONResponse

from app.config import settings
from app.dependencies import get_mec_service, limiter
from app.exceptions import status_for_code
from app.models.responses import ErrorResponse, WireResponse
from app.services.mec_service import MecService

router = APIRouter(
    prefix="/v1/mec",
    tags=["mec"],
)

ERROR_RESPONSES = {
    400: {"description": "Invalid request", "model": ErrorResponse},
    429: {"description": "Rate limit exceeded", "model": ErrorResponse},
}


def _respond(service: MecService, op: str, payload: dict[str, Any]) -> JSONResponse:
    response = service.handle_wire({**payload, "op": op})
    if response["status"] == "error":
        status = status_for_code(response["body"]["error"])
        return JSONResponse(status_code=status, content={**response["body"], "status": status})
    return JSONResponse(content=response)


@router.post(
    "/register",
    response_model=WireResponse,
    summary="Register a vehicle",
    description="""
    Binds a VIN to an opaque pseudo-id. The VIN is kept by the MEC registry
    and never appears in any response.

    Body: `{"vin": "1HGCM82633A004352", "id": null}` (`id` optionally pre-assigns the pseudo-id)

    ## Error Responses

    - `400`: invalid VIN
    - `409`: VIN or pseudo-id already registered
    """,
    responses={**ERROR_RESPONSES, 409: {"description": "Already registered", "model": ErrorResponse}},
)
@limiter.limit(settings.rate_limit)
async def register(
    request: Request,
    payload: dict[str, Any] = Body(..., examples=[{"vin": "1HGCM82633A004352"}]),
    service: MecService = Depends(get_mec_service),
):
    return _respond(service, "register", payload)


@router.post(
    "/announce",
    response_model=WireResponse,
    summary="Ingest an announcement",
    description="""
    Accepts a VSC announcement with its hash chain disclosure. The response
    status is `accepted` or `rejected` with a reason of `unknown_sender`,
    `bad_disclosure` or `stale`.
    """,
    responses=ERROR_RESPONSES,
)
@limiter.limit(settings.rate_limit)
async def announce(
    request: Request,
    payload: dict[str, Any] = Body(...),
    service: MecService = Depends(get_mec_service),
):
    return _respond(service, "announce", payload)


@router.post(
    "/cluster",
    response_model=WireResponse,
    summary="Request a secure cluster",
    description="""
    Forms a cluster around `host_id` from the announcements of the last
    `window_ms`. Status `ok` carries the key material; `degenerate` and
    `host_below_threshold` carry an empty body.
    """,
    responses={**ERROR_RESPONSES, 404: {"description": "Unknown host", "model": ErrorResponse}},
)
@limiter.limit(settings.rate_limit)
async def cluster(
    request: Request,
    payload: dict[str, Any] = Body(
        ...,
        examples=[{"host_id": "9f2c4e1a7b3d5c60", "threshold": 1.0, "ttl_ms": 10000, "window_ms": 1000}],
    ),
    service: MecService = Depends(get_mec_service),
):
    return _respond(service, "cluster", payload)


@router.get(
    "/clusters/{cluster_id}",
    response_model=WireResponse,
    summary="Fetch key material of a live cluster",
    responses={**ERROR_RESPONSES, 404: {"description": "No live cluster", "model": ErrorResponse}},
)
@limiter.limit(settings.rate_limit)
async def get_cluster(
    request: Request,
    cluster_id: str,
    now_ms: int | None = None,
    service: MecService = Depends(get_mec_service),
):
    payload: dict[str, Any] = {"cluster_id": cluster_id}
    if now_ms is not None:
        payload["now_ms"] = now_ms
    return _respond(service, "key_material", payload)
