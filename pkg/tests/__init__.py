"""
Test suite for netred
"""
