"""Jordan-Wigner measurement compiler with global z-rotation symmetry reduction."""

__version__ = "0.1.0"
