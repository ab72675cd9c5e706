# smoothing package
