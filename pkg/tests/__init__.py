"""Test suite for cross-lingual sentiment transfer."""
