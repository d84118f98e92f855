"""Configuration management package for the iterative regularization toolkit."""
