"""Utility functions for vector exchange and report writing."""
