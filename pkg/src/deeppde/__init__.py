"""Deep PDE solvers for European option pricing."""
