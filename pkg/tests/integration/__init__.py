"""Integration tests for qcorr."""
