"""Floquet modes of coupled Mathieu equations by continued matrix inversions."""
__version__ = "0.1.0"
