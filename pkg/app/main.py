from fastapi import FastAPI

from app import __version__
from app.routers import scenario_router
from app.services.config_service import config_service

config_service.configure_logging()

app = FastAPI(
    title="Microgrid Stackelberg API",
    description="API for computing generator / microgrid equilibria on DC power-flow networks",
    version=__version__
)

# include routers
app.include_router(scenario_router)

@app.get("/")
def read_root():
    """Health check endpoint"""
    return {"message": "Microgrid Stackelberg API is running", "status": "healthy"}

@app.get("/health")
def health_check():
    """Detailed health check endpoint"""
    return {
        "status": "healthy",
        "version": __version__,
        "service": "microgrid-stackelberg",
        "environment": config_service.environment
    }
