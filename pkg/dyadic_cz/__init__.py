"""Shifted dyadic filtrations and the nondoubling Calderon-Zygmund decomposition."""
