"""Unit tests for the xling_sentiment components."""
