# Configuración, errores, aritmética certificada y esquemas de entrada
