"""Type inference for sharing-free Elementary Affine Logic via linear programming."""
