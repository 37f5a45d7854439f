"""Pytest configuration and fixtures."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from app.config import settings
from app.dependencies import get_mec_service
from app.main import app
from app.models.cluster import Announcement
from app.services.hashchain import disclose, generate_chain
from app.services.mec_service import MecService
from app.services.rng import Xoshiro256StarStar
from app.services.secure_messaging import nonce_ledger

VINS = [
    "1HGCM82633A004352",
    "JH4KA7561PC008269",
    "5YJSA1E26HF000337",
    "WVWZZZ1JZXW000001",
    "1FTFW1ET5DFC10312",
]


@pytest.fixture
def fixtures_dir() -> Path:
    """Return path to fixtures directory."""
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def load_fixture(fixtures_dir):
    """Load a fixture file."""
    def _load(name: str):
        path = fixtures_dir / name
        with open(path, "r") as f:
            if name.endswith(".json"):
                return json.load(f)
            return f.read()
    return _load


@pytest.fixture
def vins() -> list[str]:
    """Valid 17-character VINs."""
    return list(VINS)


@pytest.fixture
def rng():
    """Seeded random source."""
    return Xoshiro256StarStar(7)


@pytest.fixture
def track_nonces(monkeypatch):
    """Record every (key, nonce) pair and fail on reuse."""
    monkeypatch.setattr(settings, "track_nonces", True)
    nonce_ledger.clear()
    yield nonce_ledger
    nonce_ledger.clear()


@pytest.fixture
def mec() -> MecService:
    """Fresh MEC service with a seeded generator and a frozen clock."""
    return MecService(rng=Xoshiro256StarStar(1), window_seconds=1.0, clock=lambda: 0.0)


@pytest.fixture
def announce():
    """Build a genuine announcement for a VIN at index m."""
    def _announce(sender: str, vin: str, vsc_value: float, timestamp: float, m: int = 10):
        disclosure = disclose(generate_chain(vin, m), m)
        return Announcement(
            sender=sender, disclosure=disclosure, vsc_value=vsc_value, timestamp=timestamp
        )
    return _announce


@pytest.fixture
def client(mec):
    """Create test client backed by a fresh service."""
    app.dependency_overrides[get_mec_service] = lambda: mec
    yield TestClient(app)
    app.dependency_overrides.clear()
