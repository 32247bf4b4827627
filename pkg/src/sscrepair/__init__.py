"""Semantic code repair toolkit: bug synthesis, exhaustive candidate
generation, and share/specialize/compete neural scoring."""

__version__ = "0.1.0"
