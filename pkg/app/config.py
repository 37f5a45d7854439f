"""Application configuration using pydantic-settings."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings loaded from environment variables (and an optional .env file)."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        populate_by_name=True,
    )

    # Cryptography
    hash_algorithm: str = Field(default="sha-256", alias="HASH_ALGORITHM")
    aead_algorithm: str = Field(default="aes-256-gcm", alias="AEAD_ALGORITHM")

    # Hash chains
    chain_length: int = Field(default=1000, alias="CHAIN_LENGTH")
    max_chain_length: int = Field(default=1_000_000, alias="MAX_CHAIN_LENGTH")
    vin_permissive: bool = Field(default=False, alias="VIN_PERMISSIVE")

    # Protocol timing (seconds of simulation time)
    window_seconds: float = Field(default=1.0, alias="WINDOW_SECONDS")
    replay_window_seconds: float = Field(default=5.0, alias="REPLAY_WINDOW_SECONDS")
    cluster_ttl_seconds: float = Field(default=10.0, alias="CLUSTER_TTL_SECONDS")

    # MEC socket endpoint
    mec_bind: str = Field(default="127.0.0.1", alias="MEC_BIND")
    mec_port: int = Field(default=47001, alias="MEC_PORT")
    mec_registry_file: str | None = Field(default=None, alias="MEC_REGISTRY_FILE")

    # HTTP facade
    host: str = Field(default="0.0.0.0", alias="HOST")
    port: int = Field(default=8099, alias="PORT")
    rate_limit: str = Field(default="600/minute", alias="RATE_LIMIT")

    # Simulation runs
    out_dir: str = Field(default="out", alias="OUT_DIR")
    scenario_path: str | None = Field(default=None, alias="SCENARIO_PATH")
    sim_seed: int | None = Field(default=None, alias="SIM_SEED")
    trace: bool = Field(default=False, alias="TRACE")
    track_nonces: bool = Field(default=False, alias="TRACK_NONCES")

    # Logging
    log_level: str = Field(default="INFO", alias="LOG_LEVEL")


# Global settings instance
settings = Settings()
