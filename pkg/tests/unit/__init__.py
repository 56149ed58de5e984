"""Unit tests for qcorr."""
