"""
Configuration module for the drspher toolkit.
Handles environment variables and numerical defaults.
"""
import os
from pathlib import Path


class Config:
    """Application configuration"""

    APP_NAME = "drspher"
    APP_VERSION = "1.0.0"

    CACHE_DIR = Path(os.getenv("DRSPHER_CACHE", "./data"))
    CACHE_DB_NAME = "kernel_cache.db"

    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

    # Pinned seed for random test families
    SEED = int(os.getenv("DRSPHER_SEED", "20240917"))

    # Spectral grid: composite Gauss-Legendre on [0, LAMBDA_MAX]
    LAMBDA_MAX = float(os.getenv("LAMBDA_MAX", "8.0"))
    LAMBDA_PANEL = float(os.getenv("LAMBDA_PANEL", "0.25"))
    LAMBDA_ORDER = int(os.getenv("LAMBDA_ORDER", "12"))

    # Radial grid: composite Gauss-Legendre on [0, R_MAX]
    R_MAX = float(os.getenv("R_MAX", "30.0"))
    R_PANEL = float(os.getenv("R_PANEL", "0.5"))
    R_ORDER = int(os.getenv("R_ORDER", "16"))

    # Kernel tensor grid (coarser, K is O(grid^3) in memory)
    KERNEL_PANEL = float(os.getenv("KERNEL_PANEL", "0.5"))
    KERNEL_ORDER = int(os.getenv("KERNEL_ORDER", "8"))
    KERNEL_R_MAX = float(os.getenv("KERNEL_R_MAX", "40.0"))

    # ODE tolerances
    ODE_RTOL = float(os.getenv("ODE_RTOL", "1e-12"))
    ODE_ATOL = float(os.getenv("ODE_ATOL", "1e-14"))

    @classmethod
    def cache_db_path(cls) -> Path:
        """Location of the kernel tensor cache database"""
        return cls.CACHE_DIR / cls.CACHE_DB_NAME

    @classmethod
    def ensure_cache_dir(cls):
        """Ensure cache directory exists"""
        cls.CACHE_DIR.mkdir(parents=True, exist_ok=True)
