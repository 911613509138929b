"""Integration tests running experiments over generated datasets."""
