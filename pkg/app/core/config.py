from pydantic import ConfigDict
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    PROJECT_NAME: str = "TV-GAM Toolkit"
    ENVIRONMENT: str = "development"
    LOG_LEVEL: str = "INFO"

    BACKEND_CORS_ORIGINS: str = ""

    # Backfitting solver
    FIT_TOL: float = 1e-8                 # relative objective decrease per cycle
    FIT_MAX_OUTER_ITERS: int = 10_000
    FIT_INNER_ITERS: int = 20             # proximal Newton steps per block (smooth losses)

    # Triangle-basis oracle
    ORACLE_BASIS_CAP: int = 20_000
    ORACLE_TOL: float = 1e-10
    ORACLE_MAX_ITERS: int = 200_000
    ORACLE_SUBGRADIENT_ITERS: int = 20_000

    PROX_CHECK_TOL: float = 1e-8

    # Monte-Carlo complexity estimation
    DEFAULT_DRAWS: int = 10_000
    DRAW_BATCH_SIZE: int = 256
    COMPLEXITY_WORKERS: int = 1
    MC_SIGMAS: float = 3.0

    MODEL_FORMAT_VERSION: int = 1

    @property
    def backend_cors_origins(self) -> list[str]:
        return [i.strip() for i in self.BACKEND_CORS_ORIGINS.split(",") if i.strip()]

    model_config = ConfigDict(
        case_sensitive=True,
        env_file=".env",
        extra="ignore"
    )


settings = Settings()
