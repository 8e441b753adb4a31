"""Exact planar geometry, profile algebra, scenes and their analysis."""
