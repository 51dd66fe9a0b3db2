"""Relative power integral bases of totally complex quartic extensions of
totally real fields: resolvent unit equations, lattice reduction, ellipsoid
enumeration and small-solution relative Thue equations."""

__version__ = "0.1.0"
