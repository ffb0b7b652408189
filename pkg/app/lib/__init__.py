"""Library modules for MIMO Detect."""
