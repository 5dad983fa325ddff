"""
Kernel tensor cache implementation using SQLite.
Provides persistent storage so K(lambda, mu, nu) is built once per
(m, k, density scale, grid).
"""
import hashlib
import logging
import sqlite3
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from .quadrature import GaussGrid

logger = logging.getLogger(__name__)

CACHE_VERSION = 2


class KernelTensor(BaseModel):
    """
    K(lambda_i, mu_j, nu_l) on the positive nodes of a spectral grid.

    Attributes:
        m, k: Space the tensor belongs to
        density_scale: Scale s of A(r); K is linear in it
        grid: Half-line spectral grid; K is even in every argument
        r_grid_spec: Radial rule used for the triple-product integrals
        values: Tensor of shape (N, N, N)
        quadrature_error: Per-entry contribution of the outermost radial panel
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    m: int
    k: int
    density_scale: float
    grid: GaussGrid
    r_grid_spec: str
    values: np.ndarray
    quadrature_error: np.ndarray

    @property
    def size(self) -> int:
        return self.grid.size


def cache_key(m: int, k: int, density_scale: float, grid: GaussGrid,
              r_grid: GaussGrid) -> str:
    """Content hash of everything that determines the tensor"""
    text = f"{m}|{k}|{float(density_scale)!r}|{grid.spec()}|{r_grid.spec()}|v{CACHE_VERSION}"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class KernelStore:
    """
    SQLite-based store for kernel tensors.

    Uses Write-Ahead Logging (WAL) mode so an interrupted build never corrupts
    earlier entries. Tensors are stored as row-major float64 blobs next to the
    header columns (m, k, density scale, grid spec, version).
    """

    def __init__(self, db_path: Path):
        """
        Initialize the kernel store.

        Args:
            db_path: Path to the SQLite database file
        """
        self.db_path = Path(db_path)
        self.hits = 0
        self.misses = 0
        self._conn = None

        self._init_db()
        logger.info(f"KernelStore initialized at {self.db_path}")

    def _init_db(self):
        """Initialize database schema"""
        with self._get_connection() as conn:
            conn.execute("PRAGMA journal_mode=WAL")
            conn.execute("PRAGMA synchronous=NORMAL")

            columns = {row["name"] for row in conn.execute("PRAGMA table_info(kernel_tensors)")}
            if columns and "density_scale" not in columns:
                conn.execute("DROP TABLE kernel_tensors")
                logger.warning("Dropped kernel cache written by an older cache version")

            conn.execute("""
                CREATE TABLE IF NOT EXISTS kernel_tensors (
                    cache_key TEXT PRIMARY KEY,
                    m INTEGER NOT NULL,
                    k INTEGER NOT NULL,
                    density_scale REAL NOT NULL,
                    grid_upper REAL NOT NULL,
                    grid_panel REAL NOT NULL,
                    grid_order INTEGER NOT NULL,
                    r_grid_spec TEXT NOT NULL,
                    version INTEGER NOT NULL,
                    size INTEGER NOT NULL,
                    tensor BLOB NOT NULL,
                    quadrature_error BLOB NOT NULL,
                    created_at TEXT NOT NULL
                )
            """)

            conn.execute("""
                CREATE INDEX IF NOT EXISTS idx_space
                ON kernel_tensors(m, k)
            """)

            conn.commit()
            logger.debug("Kernel cache schema initialized")

    @contextmanager
    def _get_connection(self):
        """Context manager for database connections with connection reuse"""
        if self._conn is None:
            self._conn = sqlite3.connect(str(self.db_path), timeout=10.0, check_same_thread=False)
            self._conn.row_factory = sqlite3.Row

        try:
            yield self._conn
        except Exception:
            if self._conn:
                self._conn.rollback()
            raise

    def has(self, key: str) -> bool:
        """Check whether a tensor is cached under key"""
        with self._get_connection() as conn:
            cursor = conn.execute(
                "SELECT EXISTS(SELECT 1 FROM kernel_tensors WHERE cache_key = ?) AS present",
                (key,),
            )
            return bool(cursor.fetchone()["present"])

    def get(self, key: str) -> Optional[KernelTensor]:
        """
        Load a cached tensor.

        Returns:
            KernelTensor, or None when absent or written by another cache version
        """
        with self._get_connection() as conn:
            row = conn.execute(
                "SELECT * FROM kernel_tensors WHERE cache_key = ?", (key,)
            ).fetchone()

        if row is None or row["version"] != CACHE_VERSION:
            self.misses += 1
            logger.info(f"Kernel cache miss: {key[:12]}")
            return None

        n = row["size"]
        shape = (n, n, n)
        grid = GaussGrid(upper=row["grid_upper"], panel_width=row["grid_panel"],
                         order=row["grid_order"])
        self.hits += 1
        logger.info(f"Kernel cache hit: {key[:12]} (m={row['m']}, k={row['k']}, N={n})")
        return KernelTensor(
            m=row["m"],
            k=row["k"],
            density_scale=row["density_scale"],
            grid=grid,
            r_grid_spec=row["r_grid_spec"],
            values=np.frombuffer(row["tensor"], dtype="<f8").reshape(shape).copy(),
            quadrature_error=np.frombuffer(row["quadrature_error"], dtype="<f8").reshape(shape).copy(),
        )

    def put(self, key: str, tensor: KernelTensor):
        """Store a tensor (replaces an older entry under the same key)"""
        created_at = datetime.now(timezone.utc).isoformat()
        with self._get_connection() as conn:
            conn.execute(
                """
                INSERT OR REPLACE INTO kernel_tensors
                (cache_key, m, k, density_scale, grid_upper, grid_panel, grid_order,
                 r_grid_spec, version, size, tensor, quadrature_error, created_at)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                """,
                (
                    key,
                    tensor.m,
                    tensor.k,
                    tensor.density_scale,
                    tensor.grid.upper,
                    tensor.grid.panel_width,
                    tensor.grid.order,
                    tensor.r_grid_spec,
                    CACHE_VERSION,
                    tensor.size,
                    np.ascontiguousarray(tensor.values, dtype="<f8").tobytes(),
                    np.ascontiguousarray(tensor.quadrature_error, dtype="<f8").tobytes(),
                    created_at,
                ),
            )
            conn.commit()
        logger.info(f"Stored kernel tensor {key[:12]} (N={tensor.size})")

    def get_stats(self) -> dict:
        """Entry count per space plus hit/miss counters"""
        with self._get_connection() as conn:
            count = conn.execute("SELECT COUNT(*) AS count FROM kernel_tensors").fetchone()["count"]
            spaces = [
                (row["m"], row["k"])
                for row in conn.execute("SELECT DISTINCT m, k FROM kernel_tensors ORDER BY m, k")
            ]
        return {"entries": count, "spaces": spaces, "hits": self.hits, "misses": self.misses}

    def clear_all(self):
        """Remove every cached tensor"""
        with self._get_connection() as conn:
            conn.execute("DELETE FROM kernel_tensors")
            conn.commit()
            logger.warning("All kernel tensors cleared from cache")

    def close(self):
        """Close the database connection"""
        if self._conn:
            self._conn.close()
            self._conn = None
            logger.info("Kernel cache connection closed")
