"""Dependencies for FastAPI routes.

The clustering service has no API keys; callers are rate limited by IP only.
"""

from slowapi import Limiter
from slowapi.util import get_remote_address

from app.config import settings
from app.services.mec_service import MecService, mec_service

limiter = Limiter(
    key_func=get_remote_address,
    default_limits=[settings.rate_limit],
    headers_enabled=True,
)


def get_mec_service() -> MecService:
    """Service instance behind the HTTP facade (overridden in tests)."""
    return mec_service
