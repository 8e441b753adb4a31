"""MongeForge - exact piecewise solutions of the degenerate Monge-Ampère equation."""

__version__ = "0.1.0"
