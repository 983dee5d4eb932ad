from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from app.core.config import settings
from app.core.logging import configure_logging
from app.api.models import router as models_router
from app.api.complexity import router as complexity_router
from app.api.bounds import router as bounds_router

configure_logging()

app = FastAPI(title=settings.PROJECT_NAME, redirect_slashes=False)

cors_kwargs = {
    "allow_credentials": True,
    "allow_methods": ["*"],
    "allow_headers": ["*"],
}

if settings.ENVIRONMENT == "development":
    # any origin in development, for local notebooks and dashboards
    cors_kwargs["allow_origin_regex"] = r"https?://.*"
else:
    cors_kwargs["allow_origins"] = [str(origin) for origin in settings.backend_cors_origins]

app.add_middleware(CORSMiddleware, **cors_kwargs)

app.include_router(models_router)
app.include_router(complexity_router)
app.include_router(bounds_router)

@app.get("/")
async def root():
    return {"message": f"Welcome to {settings.PROJECT_NAME}"}

@app.get("/health")
async def health_check():
    return {"status": "ok"}
