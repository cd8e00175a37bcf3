"""Image colorization as per-pixel classification over chrominance bins."""

__version__ = "0.1.0"
