"""Numerical tolerances shared by every module."""

UNITARY_TOL = 1e-12
NORM_TOL = 1e-10
PROB_TOL = 1e-9

MAX_QUBITS = 20

# branch weights at or below this are treated as impossible outcomes
ZERO_WEIGHT = 1e-20
