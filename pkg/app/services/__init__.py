"""
Services module del toolkit diofántico
Service Layer: cada módulo de cálculo es un servicio con su configuración
"""

from .lattice_service import LatticeService, mahler_constant
from .bestapprox_service import BestApproxService
from .exponent_service import ExponentService
from .transference_service import TransferenceService
from .grassmann_service import GrassmannService, wedge, wedge_vectors, embed
from .badset_service import BadsetService, radius_for_alpha, epsilon_from_alpha, epsilon_one
from .report_service import ReportService, jsonable, run_id
from .types import (
    TargetMatrix,
    LatticeBasis,
    WeightedBox,
    BestApproxSequence,
    ExponentKind,
    ExponentEstimate,
    DysonBoundInput,
    PowerLaw,
    TransferReport,
    Verdict,
    Multivector,
    LiftedPoint,
    BadCertificate,
    EnumerationConfig,
    GridConfig,
    SamplingConfig,
)

__all__ = [
    # Lattice Service
    'LatticeService',
    'mahler_constant',

    # Best Approximation Service
    'BestApproxService',

    # Exponent Service
    'ExponentService',

    # Transference Service
    'TransferenceService',

    # Grassmann Service
    'GrassmannService',
    'wedge',
    'wedge_vectors',
    'embed',

    # Badset Service
    'BadsetService',
    'radius_for_alpha',
    'epsilon_from_alpha',
    'epsilon_one',

    # Report Service
    'ReportService',
    'jsonable',
    'run_id',

    # Types
    'TargetMatrix',
    'LatticeBasis',
    'WeightedBox',
    'BestApproxSequence',
    'ExponentKind',
    'ExponentEstimate',
    'DysonBoundInput',
    'PowerLaw',
    'TransferReport',
    'Verdict',
    'Multivector',
    'LiftedPoint',
    'BadCertificate',
    'EnumerationConfig',
    'GridConfig',
    'SamplingConfig',
]
