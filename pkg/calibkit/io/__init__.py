"""
File input and output for the Calibration Toolkit
Contains CSV/JSON readers and writers, manifests and metadata sidecars
"""
