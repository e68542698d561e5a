"""Hermitian multi-well lattices driven to emulate a PT-symmetric double well."""
