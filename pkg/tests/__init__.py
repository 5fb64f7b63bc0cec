"""
EllSpin Test Suite
"""
