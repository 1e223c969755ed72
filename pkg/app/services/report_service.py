"""
ReportService - Reportes JSON y CSV reproducibles
Mismo RunConfig, mismos bytes: sin marcas de tiempo y con escritura atómica
"""
import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import tempfile
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from app import __version__
from app.core import config
from app.core.numerics import CertReal, WeightedValue, WeightVector
from app.services.types import BestApproxSequence, ScalePoint

logger = logging.getLogger("report_service")

REPORT_SCHEMA_VERSION = "1"
TOOL_NAME = "diophantine-toolkit"


def jsonable(obj: Any) -> Any:
    """Convierte resultados de los servicios en estructuras JSON deterministas"""
    if obj is None or isinstance(obj, (bool, str, int)) and not isinstance(obj, Enum):
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, CertReal):
        return repr(obj)
    if isinstance(obj, WeightedValue):
        return obj.render()
    if isinstance(obj, WeightVector):
        return obj.render()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return jsonable(float(obj))
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((jsonable(v) for v in obj), key=str)
    return str(obj)


def canonical_json(data: Any) -> str:
    return json.dumps(jsonable(data), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def run_id(run_config: Dict[str, Any]) -> str:
    """SHA-256 del RunConfig canónico (16 hex)"""
    return hashlib.sha256(canonical_json(run_config).encode("utf-8")).hexdigest()[:16]


def sequence_rows(seq: BestApproxSequence) -> List[List[Any]]:
    rows = []
    for k, entry in enumerate(seq.entries):
        log_M = entry.M.log_float()
        rows.append([
            k,
            " ".join(str(x) for x in entry.X),
            entry.Y.render(),
            entry.M.render(),
            repr(entry.Y.log_float()),
            repr(-log_M) if math.isfinite(log_M) else "inf",
        ])
    return rows


SEQUENCE_HEADER = ["k", "X", "Y", "M", "log_Y", "neg_log_M"]
PROFILE_HEADER = ["T", "residual", "omega_T", "q"]


def profile_rows(profile: Sequence[ScalePoint]) -> List[List[Any]]:
    return [[str(p.T), repr(p.residual), repr(p.omega), " ".join(str(x) for x in p.q)] for p in profile]


class ReportService:
    """Escritura de reportes versionados en el directorio de salida"""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = output_dir or config.OUTPUT_DIR
        logger.info(f"ReportService initialized - output in {self.output_dir}")

    def envelope(self, command: str, run_config: Dict[str, Any], result: Any,
                 provenance: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Sobre común: versión del esquema y de la herramienta, configuración completa y resultado"""
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool": {"name": TOOL_NAME, "version": __version__},
            "run_id": run_id(run_config),
            "command": command,
            "config": jsonable(run_config),
            "provenance": jsonable(provenance or {}),
            "result": jsonable(result),
        }

    def path_for(self, command: str, run_config: Dict[str, Any], extension: str) -> str:
        return os.path.join(self.output_dir, f"{command}_{run_id(run_config)}.{extension}")

    def _atomic_write(self, path: str, write: Callable[[Any], None], newline: Optional[str] = None) -> str:
        directory = os.path.dirname(path) or "."
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.splitext(path)[1])
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as f:
                write(f)
            os.replace(tmp_path, path)
        except BaseException:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            raise
        return path

    def write_json(self, path: str, data: Dict[str, Any]) -> str:
        def write(f):
            json.dump(jsonable(data), f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")

        self._atomic_write(path, write)
        logger.info(f"📄 JSON report written: {path}")
        return path

    def write_csv(self, path: str, header: Sequence[str], rows: Iterable[Sequence[Any]],
                  preamble: Sequence[str] = ()) -> str:
        """CSV con cabecera; las líneas de preámbulo van como comentarios '#'"""
        def write(f):
            for line in preamble:
                f.write(f"# {line}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(list(header))
            for row in rows:
                writer.writerow([jsonable(v) for v in row])

        self._atomic_write(path, write, newline="")
        logger.info(f"📊 CSV report written: {path}")
        return path
