"""
Command-line front end: file formats, settings and experiment sweeps.
"""
