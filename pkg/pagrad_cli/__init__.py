"""
pagrad CLI

Pixel-array graph and radiomics classifiers for labeled 3D ROI patches.
"""

__version__ = "1.0.0"
__author__ = "FastAI Project"
__description__ = "Graph spectral and radiomics classification toolkit for 3D ROI patches"
