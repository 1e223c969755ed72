"""
Jerarquía de errores del toolkit
Cada error conoce su código de salida y los detalles que van al reporte JSON
"""
from typing import Any, Dict, Optional


class DiophantineError(Exception):
    """Error base del toolkit"""
    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": self.details,
        }


class InstanceParseError(DiophantineError):
    """Token de instancia, pesos o theta no interpretable"""
    exit_code = 2


class DegenerateRank(DiophantineError):
    """El grupo ^tA Z^m + Z^n no tiene rango maximal"""
    exit_code = 3

    def __init__(self, message: str, witness=None, details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        if witness is not None:
            details["witness"] = [int(x) for x in witness]
        super().__init__(message, details)
        self.witness = tuple(int(x) for x in witness) if witness is not None else None


class BudgetExceeded(DiophantineError):
    """Presupuesto de enumeración agotado"""
    exit_code = 4

    def __init__(self, message: str, partial_count: int, budget: int):
        super().__init__(message, {"partial_count": partial_count, "budget": budget})
        self.partial_count = partial_count
        self.budget = budget


class PrecisionExhausted(DiophantineError):
    """Los intervalos siguen solapados al alcanzar la precisión máxima"""
    exit_code = 5

    def __init__(self, message: str, left: str = "", right: str = "", bits: int = 0):
        super().__init__(message, {"left": left, "right": right, "bits": bits})
        self.bits = bits


class InsufficientData(DiophantineError):
    """Secuencia o malla demasiado corta para la comprobación pedida"""
    exit_code = 6


class PreconditionViolation(DiophantineError):
    """Parámetros fuera del rango admitido por la operación"""
    exit_code = 7


class TheoremViolation(DiophantineError):
    """Un validador encontró un contraejemplo certificado (no debe ocurrir)"""
    exit_code = 8
