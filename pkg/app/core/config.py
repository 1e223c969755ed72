"""
Configuración centralizada del toolkit de aproximación diofántica
"""
import os
from fractions import Fraction

from dotenv import load_dotenv

# Cargar variables de entorno
load_dotenv()

# Aritmética certificada
PRECISION_CAP_BITS = int(os.getenv("DIOPHANTINE_PRECISION_BITS", "256"))
INITIAL_PRECISION_BITS = int(os.getenv("DIOPHANTINE_INITIAL_PRECISION_BITS", "64"))

# Presupuesto de enumeración (puntos candidatos por llamada)
ENUMERATION_BUDGET = int(os.getenv("DIOPHANTINE_ENUMERATION_BUDGET", "10000000"))

# Malla geométrica de escalas T
TGRID_MIN = Fraction(os.getenv("DIOPHANTINE_TMIN", "2"))
TGRID_MAX = Fraction(os.getenv("DIOPHANTINE_TMAX", "16384"))
# 2^(1/4) redondeado a 1/1024
TGRID_RATIO = Fraction(os.getenv("DIOPHANTINE_TRATIO", "1218/1024"))

# Estimadores de exponentes
EXPONENT_CAP = Fraction(os.getenv("DIOPHANTINE_EXPONENT_CAP", "50"))
TRUNCATION_SLACK = float(os.getenv("DIOPHANTINE_TRUNCATION_SLACK", "0.05"))

# Muestreo de desplazamientos theta
THETA_SAMPLES = int(os.getenv("DIOPHANTINE_THETA_SAMPLES", "128"))
TOLERANCE_BAND = float(os.getenv("DIOPHANTINE_TOLERANCE", "0.1"))
DEFAULT_SEED = int(os.getenv("DIOPHANTINE_SEED", "0"))

# Límites de escritorio para el álgebra exterior
MAX_AMBIENT_DIM = int(os.getenv("DIOPHANTINE_MAX_AMBIENT_DIM", "5"))
MAX_GRADE = int(os.getenv("DIOPHANTINE_MAX_GRADE", "3"))

# Salidas
OUTPUT_DIR = os.getenv("DIOPHANTINE_OUTPUT_DIR", "reports")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")


def print_config_status():
    """Imprime el estado de la configuración al iniciar"""
    print(f"🔧 Configuración cargada:")
    print(f"   PRECISION_CAP_BITS: {PRECISION_CAP_BITS}")
    print(f"   ENUMERATION_BUDGET: {ENUMERATION_BUDGET}")
    print(f"   T-grid: [{TGRID_MIN}, {TGRID_MAX}] ratio {TGRID_RATIO}")
    print(f"   EXPONENT_CAP: {EXPONENT_CAP}")
    print(f"   THETA_SAMPLES: {THETA_SAMPLES} (seed {DEFAULT_SEED})")
    print(f"   OUTPUT_DIR: {OUTPUT_DIR} {'✅ Existe' if os.path.isdir(OUTPUT_DIR) else '❌ Se creará al escribir'}")

    if PRECISION_CAP_BITS < INITIAL_PRECISION_BITS:
        print("⚠️  ADVERTENCIA: DIOPHANTINE_PRECISION_BITS es menor que la precisión inicial.")
        print("   Las comparaciones certificadas fallarán con PrecisionExhausted.")

    if TGRID_RATIO <= 1 or TGRID_MIN <= 1 or TGRID_MAX <= TGRID_MIN:
        print("⚠️  ADVERTENCIA: malla de escalas inválida (se requiere 1 < TMIN < TMAX y TRATIO > 1).")
