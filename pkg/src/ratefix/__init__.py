"""Fixed-point solvers for loss-ratio re-rating and Leslie-Gower equilibria."""
