"""Configuration, initial data, persistence and experiment orchestration."""
