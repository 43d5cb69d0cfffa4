"""
netred - Structure-preserving reduction of diffusively coupled linear networks
"""

__version__ = "1.0.0"
