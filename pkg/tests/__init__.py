"""
Unit tests for Shadowlab
"""
