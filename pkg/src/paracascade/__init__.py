"""Paradifferential toolkit and frequency-cascade diagnostics for 2D Euler / gSQG."""
