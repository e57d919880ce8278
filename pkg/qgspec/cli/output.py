"""Artifact writers. Data files are deterministic; only the manifest carries a timestamp."""

import json
import logging
import platform
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import mpmath
import numpy as np
import pandas as pd
import pydantic
import scipy

from .. import __version__

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.15g"


class ResultEncoder(json.JSONEncoder):
    """JSON encoder for complex numbers, numpy scalars and paths."""

    def default(self, obj: Any) -> Any:
        if isinstance(obj, complex):
            return [obj.real, obj.imag]
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, Path):
            return str(obj)
        return super().default(obj)


class ArtifactWriter:
    """Writes files under one output directory and remembers what it wrote."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []

    def _path(self, name: str) -> Path:
        self.written.append(name)
        return self.out_dir / name

    def csv(self, name: str, rows: Sequence[Mapping[str, Any]], columns: Optional[List[str]] = None) -> Path:
        frame = pd.DataFrame(list(rows), columns=columns)
        path = self._path(name)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logger.info("wrote %s (%d rows)", path, len(frame))
        return path

    def json(self, name: str, payload: Any) -> Path:
        path = self._path(name)
        path.write_text(dump_json(payload) + "\n", encoding="utf-8")
        logger.info("wrote %s", path)
        return path

    def text(self, name: str, content: str) -> Path:
        path = self._path(name)
        path.write_text(content, encoding="utf-8")
        return path


def dump_json(payload: Any) -> str:
    return json.dumps(payload, cls=ResultEncoder, indent=2, sort_keys=True, ensure_ascii=False)


def library_versions() -> Dict[str, str]:
    return {
        "qgspec": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
        "mpmath": mpmath.__version__,
    }
