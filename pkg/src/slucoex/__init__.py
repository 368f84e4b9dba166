"""Coexistence of NR sidelink in unlicensed spectrum with Wi-Fi.

Submodules: ``phy`` (link budget and metrics), ``mac`` (contention state
machines), ``ccha`` (collaborative channel access), ``sim`` (event engine),
``rl`` (hierarchical deep Q-learning for access and power) and ``cli``.
"""

__version__ = "0.1.0"
