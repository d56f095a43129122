"""Convert part-segmented meshes into articulated objects."""

__version__ = "0.1.0"
