"""
latentroute - evasión de obstáculos amorfos dinámicos para un brazo de 7 GDL
mediante un manifold latente 2D aprendido con un autoencoder variacional.
"""

__version__ = "1.0.0"
