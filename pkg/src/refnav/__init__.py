"""Desk-scale simulator, benchmark harness, and reference agent for remote
embodied referring-expression tasks on viewpoint graphs."""

__version__ = "0.1.0"
