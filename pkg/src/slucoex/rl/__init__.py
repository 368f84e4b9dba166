"""Hierarchical deep Q-learning for SL-U channel access and power control."""
