"""
Esquemas Pydantic para validación de instancias y configuraciones de ejecución
"""
from fractions import Fraction
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ValidationError, field_validator, model_validator

from app.core import config
from app.core.errors import DiophantineError, InstanceParseError
from app.core.numerics import CertReal, WeightVector, parse_rational, parse_real, parse_weights
from app.services.types import TargetMatrix

CommandName = Literal["bestapprox", "exponents", "dyson", "bl", "intermediate", "badgen"]


def _check_token(token: str) -> str:
    try:
        parse_real(token)
    except DiophantineError as e:
        raise ValueError(e.message)
    return str(token).strip()


class InstanceSpec(BaseModel):
    name: str = "custom"
    m: Optional[int] = None
    n: Optional[int] = None
    matrix: List[List[str]]
    weights_s: str = "uniform"
    weights_r: str = "uniform"
    theta: Optional[List[str]] = None  # None o "zero": caso homogéneo
    theta_samples: Optional[int] = None
    theta_seed: int = config.DEFAULT_SEED

    @field_validator("matrix")
    @classmethod
    def validate_matrix(cls, v):
        if not v or not v[0] or any(len(row) != len(v[0]) for row in v):
            raise ValueError("matrix must be a nonempty rectangular array")
        return [[_check_token(t) for t in row] for row in v]

    @field_validator("theta")
    @classmethod
    def validate_theta(cls, v):
        if v is None:
            return None
        if [t.strip().lower() for t in v] == ["zero"]:
            return None
        return [_check_token(t) for t in v]

    @field_validator("theta_samples")
    @classmethod
    def validate_samples(cls, v):
        if v is not None and v <= 0:
            raise ValueError("theta_samples must be positive")
        return v

    @model_validator(mode="after")
    def validate_shape(self):
        rows, cols = len(self.matrix), len(self.matrix[0])
        if self.m not in (None, rows) or self.n not in (None, cols):
            raise ValueError(f"declared shape {self.m}x{self.n} differs from matrix shape {rows}x{cols}")
        self.m, self.n = rows, cols
        for token, dim in ((self.weights_s, rows), (self.weights_r, cols)):
            try:
                parse_weights(token, dim)
            except DiophantineError as e:
                raise ValueError(e.message)
        return self

    def target(self) -> TargetMatrix:
        return TargetMatrix.of([[parse_real(t) for t in row] for row in self.matrix], label=self.name)

    def weights(self) -> Tuple[WeightVector, WeightVector]:
        return parse_weights(self.weights_s, self.m), parse_weights(self.weights_r, self.n)

    def theta_values(self) -> Optional[Tuple[CertReal, ...]]:
        if self.theta is None:
            return None
        return tuple(parse_real(t) for t in self.theta)

    def provenance(self) -> List[Dict[str, str]]:
        """Origen de cada constante con nombre usada por la instancia"""
        tokens = sorted({t for row in self.matrix for t in row} | set(self.theta or []))
        records = []
        for token in tokens:
            value = parse_real(token)
            records.append({
                "token": token,
                "kind": "rational" if value.is_exact else "named",
                "value": repr(value),
                "approx": f"{float(value):.17g}",
                "symbolic": "" if value.is_exact or value.symbolic is None else str(value.symbolic),
            })
        return records


class RunConfig(BaseModel):
    command: CommandName
    instance: Optional[InstanceSpec] = None
    tmin: str = str(config.TGRID_MIN)
    tmax: str = str(config.TGRID_MAX)
    tratio: str = str(config.TGRID_RATIO)
    budget: int = config.ENUMERATION_BUDGET
    precision: int = config.PRECISION_CAP_BITS
    seed: int = config.DEFAULT_SEED
    out: str = config.OUTPUT_DIR
    format: Optional[Literal["json", "csv"]] = None  # None: ambos
    options: Dict[str, Any] = {}

    @field_validator("tmin", "tmax", "tratio")
    @classmethod
    def validate_rational(cls, v):
        try:
            value = parse_rational(v)
        except DiophantineError as e:
            raise ValueError(e.message)
        return str(value)

    @field_validator("budget", "precision")
    @classmethod
    def validate_positive(cls, v):
        if v <= 0:
            raise ValueError("budgets must be positive")
        return v

    @model_validator(mode="after")
    def validate_grid(self):
        tmin, tmax, ratio = Fraction(self.tmin), Fraction(self.tmax), Fraction(self.tratio)
        if tmin <= 1 or tmax <= tmin or ratio <= 1:
            raise ValueError(f"invalid T-grid [{tmin}, {tmax}] ratio {ratio}")
        return self

    def grid_parameters(self) -> Tuple[Fraction, Fraction, Fraction]:
        return Fraction(self.tmin), Fraction(self.tmax), Fraction(self.tratio)

    def canonical(self) -> Dict[str, Any]:
        """Forma JSON estable; el directorio de salida no forma parte de la identidad del run"""
        data = self.model_dump(mode="json")
        data.pop("out", None)
        return data


def build_instance(**fields) -> InstanceSpec:
    try:
        return InstanceSpec(**fields)
    except ValidationError as e:
        raise InstanceParseError(f"invalid instance: {e.errors()[0]['msg']}",
                                 {"errors": [err["msg"] for err in e.errors()]})


def build_run_config(**fields) -> RunConfig:
    try:
        return RunConfig(**fields)
    except ValidationError as e:
        raise InstanceParseError(f"invalid run configuration: {e.errors()[0]['msg']}",
                                 {"errors": [err["msg"] for err in e.errors()]})
