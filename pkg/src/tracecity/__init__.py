"""tracecity: collaborative 3D code-city visualization of distributed traces."""

__version__ = "0.1.0"
