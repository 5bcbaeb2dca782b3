# ==============================================================================
# __init__.py — Router layer exports
# ==============================================================================
# Purpose: Export router modules for easy importing
# Sections: Imports, Public exports
# ==============================================================================

from .scenario_router import router as scenario_router

# ==============================================================================
# Public exports
# ==============================================================================
__all__ = ["scenario_router"]
