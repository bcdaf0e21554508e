"""Calculus modules for triolex"""
