"""Analysis package - DP verification, bounds, oracles and reports"""
