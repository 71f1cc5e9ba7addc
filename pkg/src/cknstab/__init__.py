"""Numerics for the stability of Caffarelli-Kohn-Nirenberg extremals on the cylinder."""

from .params import CknParams, Region, classify_region, felli_schneider, make_params

__all__ = ["CknParams", "Region", "classify_region", "felli_schneider", "make_params"]
