"""Extremal bipartite quantum states with fixed marginals."""

__version__ = "0.1.0"
