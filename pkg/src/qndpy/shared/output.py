"""Machine-readable outputs: JSON reports, CSV tables and the run manifest."""

import csv
from dataclasses import asdict, dataclass, field, is_dataclass
import datetime
from enum import Enum
from importlib.metadata import PackageNotFoundError, version
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Optional
import numpy as np

logger = logging.getLogger(__name__)


def tool_version() -> str:
    try:
        return version("qndpy")
    except PackageNotFoundError:
        return "0.1.0"


def to_jsonable(value: Any) -> Any:
    """Recursively convert dataclasses, enums, complex and numpy values for json."""
    if is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(asdict(value))
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def resolve_output(out_dir: Path, name: str) -> Path:
    """Path of `name` inside `out_dir`; refuses anything that escapes the directory."""
    out_dir = Path(out_dir).resolve()
    path = (out_dir / name).resolve()
    if out_dir not in path.parents:
        raise ValueError(f"output {name} escapes the output directory {out_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    return path


def write_json(path: Path, data: Any) -> Path:
    path = Path(path)
    path.write_text(
        json.dumps(to_jsonable(data), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    logger.debug("Wrote %s", path)
    return path


def format_cell(value: Any) -> str:
    """17 significant digits for floats, `re+imj` for complex, empty for None."""
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (complex, np.complexfloating)):
        return f"{value.real:.17g}{value.imag:+.17g}j"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(
    path: Path,
    rows: Iterable[dict],
    columns: Optional[list[str]] = None,
    schema: str = "",
) -> Path:
    """CSV with a `# schema: ...` comment line ahead of the header row."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        if schema:
            handle.write(f"# schema: {schema}\n")
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(column)) for column in columns])
    logger.debug("Wrote %d rows to %s", len(rows), path)
    return path


@dataclass
class RunManifest:
    command: str
    config_path: Optional[str]
    config_sha256: Optional[str]
    seed: Optional[int] = None
    version: str = field(default_factory=tool_version)
    timestamp: str = field(
        default_factory=lambda: datetime.datetime.now(datetime.timezone.utc).isoformat()
    )
    options: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def add_output(self, path: Path) -> Path:
        self.outputs.append(str(path))
        return path

    def write(self, out_dir: Path) -> Path:
        path = resolve_output(out_dir, "manifest.json")
        return write_json(path, self)
