"""Numerical laboratory for the discrete Laplacian with a surface Maryland potential."""
