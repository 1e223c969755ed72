"""
Corpus de instancias con nombre
Cada entrada tiene un oráculo conocido (fracciones continuas, exponentes clásicos o rango degenerado)
"""
from typing import Dict, List

from app.core.errors import InstanceParseError
from app.core.schemas import InstanceSpec, build_instance

_CORPUS: Dict[str, Dict] = {
    "phi": {"matrix": [["phi"]]},
    "sqrt2": {"matrix": [["sqrt(2)"]]},
    "sqrt3": {"matrix": [["sqrt(3)"]]},
    "half": {"matrix": [["1/2"]]},
    "liouville": {"matrix": [["liouville(2)"]]},
    "cubic_pair": {"matrix": [["root(2,3)"], ["root(4,3)"]]},
    "cubic_row": {"matrix": [["root(2,3)", "root(4,3)"]]},
}

# Alias aceptados por --instance
_ALIASES = {"liouville(2)": "liouville", "golden": "phi", "sqrt(2)": "sqrt2", "sqrt(3)": "sqrt3", "1/2": "half"}


def list_instances() -> List[str]:
    return sorted(_CORPUS)


def get_instance(name: str, weights_s: str = "uniform", weights_r: str = "uniform", **extra) -> InstanceSpec:
    key = _ALIASES.get(name.strip().lower(), name.strip().lower())
    if key not in _CORPUS:
        raise InstanceParseError(f"unknown instance {name!r}; available: {', '.join(list_instances())}")
    return build_instance(name=key, weights_s=weights_s, weights_r=weights_r, **_CORPUS[key], **extra)
