"""Tests for the triolex calculus engine"""
