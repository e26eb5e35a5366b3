from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from datetime import datetime, timezone
import logging
import os

from app import __version__
from app.errors import (
    CurveValidationError,
    MarketDataError,
    ProblemError,
    SchedulerError,
    VerificationError,
)

logger = logging.getLogger(__name__)

# Create FastAPI app
app = FastAPI(
    title="Electrolyzer Module Scheduler",
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc",
    openapi_url="/openapi.json",
)

# Inputs that parse but describe an impossible plant or market
UNPROCESSABLE = (CurveValidationError, MarketDataError, ProblemError, VerificationError)


@app.exception_handler(SchedulerError)
async def scheduler_exception_handler(request: Request, exc: SchedulerError):
    status = 422 if isinstance(exc, UNPROCESSABLE) else 400
    logger.warning(f"{request.url.path}: {type(exc).__name__}: {exc}")
    return JSONResponse(content={"detail": str(exc), "error": type(exc).__name__}, status_code=status)


# Global exception handler for unhandled errors
@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    logger.exception(f"Unhandled error on {request.url.path}")
    return JSONResponse(content={"error": "Internal server error"}, status_code=500)


app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=False,
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["Content-Type", "Accept", "Authorization"],
    max_age=600,
)

from app.routers.scenarios import router as scenarios_router
app.include_router(scenarios_router)


@app.get("/healthz")
def healthz():
    return {"ok": True, "ts": datetime.now(timezone.utc).isoformat()}


@app.get("/version")
def version():
    return {"name": "electrolyzer-module-scheduler", "version": app.version}


def main() -> None:
    import uvicorn
    uvicorn.run("app.main:app", host=os.getenv("HOST", "0.0.0.0"), port=int(os.getenv("PORT", "8000")))


if __name__ == "__main__":
    main()
