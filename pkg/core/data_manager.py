import io
import json
import logging
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError as RuamelYAMLError

from core import __version__
from core.bekk_model import spec_from_dict, validate_spec
from core.errors import SpecFileError, SpecParseError
from core.models import ModelSpec, PathSample

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".meta.json"
YAML_SUFFIXES = (".yml", ".yaml")


def build_metadata(seed: Optional[int] = None, spec_digest: Optional[str] = None,
                   **extra: Any) -> Dict[str, Any]:
    """Metadata block embedded in every output."""
    metadata = {
        "generated_at": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
        "tool_version": __version__,
        "seed": seed,
        "spec_digest": spec_digest,
    }
    metadata.update(extra)
    return metadata


def atomic_write_text(path: Path, text: str):
    """Writes through a temp file in the target directory, then renames over the target."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
    except OSError as e:
        raise SpecFileError(f"Cannot write {path}: {e}") from None
    logger.info(f"Saved {path}")


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + SIDECAR_SUFFIX)


class DataManager:
    """Reads and writes specs, paths, reports and run configs."""

    def __init__(self):
        self.yaml = YAML(typ="safe")

    def _read_text(self, path: Path) -> str:
        try:
            with open(path, "r", encoding="utf-8") as f:
                return f.read()
        except OSError as e:
            raise SpecFileError(f"Cannot read {path}: {e}") from None

    def load_raw(self, path: str) -> Any:
        """Parses a JSON or YAML document; errors carry the file position."""
        path = Path(path)
        text = self._read_text(path)
        if path.suffix.lower() in YAML_SUFFIXES:
            try:
                return self.yaml.load(text)
            except RuamelYAMLError as e:
                mark = getattr(e, "problem_mark", None)
                line = mark.line + 1 if mark is not None else None
                column = mark.column + 1 if mark is not None else None
                raise SpecParseError(str(path), getattr(e, "problem", None) or str(e), line, column) from None
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise SpecParseError(str(path), e.msg, e.lineno, e.colno) from None

    def load_spec(self, path: str) -> ModelSpec:
        spec = validate_spec(spec_from_dict(self.load_raw(path)))
        logger.info(f"Loaded spec {path} (d={spec.d}, l={spec.l})")
        return spec

    def save_spec(self, spec: ModelSpec, path: str):
        """JSON spec file; floats are written with repr, so a reload is exact."""
        atomic_write_text(Path(path), json.dumps(spec.to_dict(), indent=2) + "\n")

    def load_run_config(self, path: str) -> Dict[str, Any]:
        """Flag defaults from a YAML run file (keys use flag names, dashes or underscores)."""
        text = self._read_text(Path(path))
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise SpecParseError(str(path), str(e), mark.line + 1 if mark else None,
                                 mark.column + 1 if mark else None) from None
        if not isinstance(data, dict):
            raise SpecParseError(str(path), "run config must be a mapping of flag names to values")
        return {str(key).replace("-", "_"): value for key, value in data.items()}

    def write_json(self, data: Dict[str, Any], path: str, metadata: Dict[str, Any]):
        """Report JSON with the metadata block first."""
        document = {"metadata": metadata, **data}
        atomic_write_text(Path(path), json.dumps(document, indent=2) + "\n")

    def write_csv(self, header: Sequence[str], rows: np.ndarray, path: str, metadata: Dict[str, Any],
                  fmt: str = "%.17g"):
        """CSV data file plus a .meta.json sidecar carrying the metadata."""
        buffer = io.StringIO()
        np.savetxt(buffer, np.atleast_2d(rows) if len(rows) else np.empty((0, len(header))),
                   delimiter=",", header=",".join(header), comments="", fmt=fmt)
        atomic_write_text(Path(path), buffer.getvalue())
        atomic_write_text(sidecar_path(Path(path)), json.dumps(metadata, indent=2) + "\n")

    def save_path(self, sample: PathSample, path: str, metadata: Dict[str, Any]):
        header = ["t"] + [f"x{i + 1}" for i in range(sample.d)]
        rows = np.column_stack([np.arange(1, sample.T + 1), sample.data]) if sample.T else []
        self.write_csv(header, rows, path, {**metadata, **sample.to_metadata()})

    def load_path(self, path: str) -> PathSample:
        """Reads a path CSV (header t,x1..xd) and its sidecar when present."""
        path = Path(path)
        text = self._read_text(path)
        lines = text.splitlines()
        if not lines:
            raise SpecParseError(str(path), "empty path file")
        header = [h.strip() for h in lines[0].split(",")]
        if len(header) < 2 or header[0] != "t":
            raise SpecParseError(str(path), "expected header t,x1,...,xd", 1, 1)
        try:
            table = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
        except ValueError as e:
            raise SpecParseError(str(path), str(e)) from None
        if table.size == 0:
            table = np.empty((0, len(header)))
        if table.shape[1] != len(header):
            raise SpecParseError(str(path), f"rows have {table.shape[1]} columns, header has {len(header)}")

        meta: Dict[str, Any] = {}
        side = sidecar_path(path)
        if side.exists():
            meta = self.load_raw(str(side))
        else:
            logger.warning(f"No sidecar for {path}; seed and spec digest unknown")
        return PathSample(
            data=table[:, 1:].copy(),
            seed=meta.get("seed") if meta.get("seed") is not None else -1,
            burnin=int(meta.get("burnin", 0)),
            spec_digest=meta.get("spec_digest") or "unknown",
            diverged=bool(meta.get("diverged", False)),
            diverged_at=meta.get("diverged_at"),
            representation=meta.get("representation", "sre"),
        )


def spectral_rows(theta_grid: np.ndarray, phi: Dict[int, np.ndarray]) -> List[List[float]]:
    """Long format rows (theta, k, phi) for the spectral-measure CSV."""
    return [[float(theta), k, float(values[g])] for k, values in phi.items() for g, theta in enumerate(theta_grid)]
