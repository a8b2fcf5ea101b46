"""Experiment orchestration, data I/O and the command-line interface."""
