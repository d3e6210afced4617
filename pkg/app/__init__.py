"""Top-level package for the fracmem fractional diffusion solver."""
