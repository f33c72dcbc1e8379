"""
Command line interface for the Calibration Toolkit
"""
