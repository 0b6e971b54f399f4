"""Mechanisms package - Mechanism construction and matrix transforms"""
