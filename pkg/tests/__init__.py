"""Test suite for MIMO Detect."""
