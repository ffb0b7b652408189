"""MIMO Detect - learned and classical MIMO detection toolkit."""

__version__ = "1.0.0"
