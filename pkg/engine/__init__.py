"""Engine package - Channels, graphs, queries and settings"""
