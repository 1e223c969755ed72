#!/usr/bin/env python3
"""
Punto de entrada del toolkit diofántico

Uso:
    python main.py <bestapprox|exponents|dyson|bl|intermediate|badgen> [opciones]
"""
import sys

from dotenv import load_dotenv

# Cargar variables de entorno
load_dotenv()

from app.cli import main

if __name__ == "__main__":
    sys.exit(main())
