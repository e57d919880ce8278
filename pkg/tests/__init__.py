"""qgspec test suite."""
