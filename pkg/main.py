"""
Collective Scattering - FastAPI Backend
HTTP surface over the study service
"""

import json
import logging
import os

from dotenv import load_dotenv
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from services.config import RunConfig, ShellGeometry, config_schema
from services.errors import CollectiveError, ConfigError
from services.geometry import Solid
from services.study_service import StudyService

# Load environment variables
load_dotenv(override=True)
logging.basicConfig(level=os.getenv("COLLECTIVE_LOG_LEVEL", "INFO").upper())
logger = logging.getLogger("collective.api")
logger.info("[API] Starting collective scattering backend...")

app = FastAPI(
    title="Collective Scattering API",
    description="Collective scattering matrix, absorption modes and dispersion energies of coupled dipoles",
    version="1.0.0",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=os.getenv("COLLECTIVE_CORS_ORIGINS", "http://localhost:5173,http://localhost:3000").split(","),
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Initialize services with error handling
try:
    study_service = StudyService(threads=int(os.getenv("COLLECTIVE_THREADS", "1")))
except Exception as e:
    logger.error(f"[API] Failed to initialize StudyService: {e}")
    study_service = None


def _table_payload(table, config: RunConfig) -> dict:
    return {
        "task": config.task,
        "l_max": config.l_max,
        "units": table.attrs.get("units", {}),
        "rows": json.loads(table.to_json(orient="records", double_precision=15)),
    }


def _run(config: RunConfig) -> dict:
    if not study_service:
        raise HTTPException(status_code=503, detail="Study service unavailable (initialization failed)")
    try:
        return _table_payload(study_service.run(config), config)
    except ConfigError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except CollectiveError as e:
        logger.error(f"[API] numerical failure: {type(e).__name__}: {e}")
        raise HTTPException(status_code=500, detail=f"{type(e).__name__}: {e}")


@app.get("/")
async def root():
    """Health check endpoint"""
    return {
        "status": "online",
        "service": "Collective Scattering API",
        "version": "1.0.0",
    }


@app.get("/api/v1/schema")
async def get_schema():
    """JSON schema of run configurations"""
    return config_schema()


@app.post("/api/v1/validate")
async def validate(config: RunConfig):
    """
    Validate a run configuration

    Returns:
        The normalized configuration (defaults filled in)
    """
    return {"valid": True, "config": config.model_dump(mode="json")}


@app.post("/api/v1/run")
def run(config: RunConfig):
    """
    Run the task described by a configuration

    Returns:
        Table rows with units; NaN entries are returned as null
    """
    return _run(config)


@app.get("/api/v1/absorption/{solid}")
def get_absorption(solid: Solid, ka: float = 3.141592653589793, kR: float = 0.8, l_max: int = 8):
    """
    Plane-wave absorption of a Platonic shell at a single ka

    Args:
        solid: tetrahedron, octahedron, cube, icosahedron or dodecahedron
        ka: reduced shell radius
        kR: sphere size parameter
        l_max: mode truncation
    """
    try:
        config = RunConfig(
            task="plane_wave_absorption",
            geometry=ShellGeometry(solid=solid, ka=ka, kR=kR),
            l_max=l_max,
        )
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return _run(config)


if __name__ == "__main__":
    import uvicorn
    uvicorn.run("main:app", host="0.0.0.0", port=int(os.getenv("PORT", "8000")), reload=True)
