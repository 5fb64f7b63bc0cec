"""
Unit tests for EllSpin
"""
