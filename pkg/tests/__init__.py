"""
Test suite for strongcat.
"""
