"""
Unit tests for strongcat.
"""
