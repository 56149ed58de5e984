"""End-to-end tests for qcorr."""
