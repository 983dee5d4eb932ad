from contextlib import contextmanager
import logging

from fastapi import HTTPException

from app.core.exceptions import GamError

logger = logging.getLogger(__name__)


@contextmanager
def service_errors():
    """Translate service failures into HTTP errors carrying the error's status."""
    try:
        yield
    except GamError as e:
        logger.warning(f"{type(e).__name__}: {e}")
        raise HTTPException(status_code=e.status_code, detail=str(e))
