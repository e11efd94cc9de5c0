"""Verification workbench: BMC and k-induction over a small loop language,
plus an explicit-state oracle and a benchmarking harness."""

__version__ = "0.1.0"
