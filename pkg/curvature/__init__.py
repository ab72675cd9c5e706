# curvature package
