"""
Integration tests for strongcat.

These tests run whole pipelines at production sizes and are marked slow where needed.
"""
