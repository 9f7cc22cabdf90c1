"""
MS-KSD-Bayes Test Suite

Unit tests for kernels, Stein discrepancies, models and posteriors, plus
experiment, CLI and configuration tests. Long replications are marked slow.
"""
