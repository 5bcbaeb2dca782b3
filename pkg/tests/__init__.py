# ==============================================================================
# __init__.py — Test package
# ==============================================================================
# Purpose: Test package initialization
# ==============================================================================
