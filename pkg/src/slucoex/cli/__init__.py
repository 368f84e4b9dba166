"""Command-line front end and experiment matrix."""
