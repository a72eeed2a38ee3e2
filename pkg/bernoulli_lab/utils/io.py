"""
Output directory writer with per-file content hashes.
"""

import hashlib
import json
import logging
import threading
import time
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class OutputWriter:
    """
    Serializes every write into one output directory.

    CSVs use 17 significant digits, JSON is written with sorted keys, and
    each file's SHA-256 goes into ``manifest.json`` on ``finalize``.
    """

    def __init__(self, directory: Path, seed: Optional[int] = None):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.seed = seed
        self.files: Dict[str, str] = {}
        self._lock = threading.Lock()
        self._started = time.perf_counter()

    def _record(self, path: Path) -> Path:
        self.files[path.name] = sha256_file(path)
        logger.debug("Wrote %s", path)
        return path

    def write_json(self, name: str, document: Any) -> Path:
        path = self.directory / name
        with self._lock:
            with open(path, "w", encoding="utf-8") as f:
                json.dump(_jsonable(document), f, indent=2, sort_keys=True)
                f.write("\n")
            return self._record(path)

    def write_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.directory / name
        with self._lock:
            frame.to_csv(path, index=False, float_format="%.17g")
            return self._record(path)

    def finalize(self) -> Path:
        """Write ``manifest.json`` listing every file with its hash."""
        manifest = {
            "files": dict(sorted(self.files.items())),
            "seed": self.seed,
            "runtime_s": round(time.perf_counter() - self._started, 3),
        }
        path = self.directory / MANIFEST
        with self._lock:
            with open(path, "w", encoding="utf-8") as f:
                json.dump(manifest, f, indent=2, sort_keys=True)
                f.write("\n")
        logger.debug("Manifest lists %d file(s)", len(self.files))
        return path
