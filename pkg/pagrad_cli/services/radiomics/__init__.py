"""Radiomics filters and feature families package."""

from .base_family import FeatureFamily
from .discretization import discretize
from .filters import FilterKind, apply_filter, enabled_filters, haar_subbands
from .first_order import FirstOrderFamily, first_order_features
from .glcm import DIRECTIONS, GLCMFamily, glcm_features
from .glrlm import GLRLMFamily, glrlm_features
from .shape import ShapeFamily, shape_features

__all__ = [
    'FeatureFamily',
    'FirstOrderFamily',
    'GLCMFamily',
    'GLRLMFamily',
    'ShapeFamily',
    'FilterKind',
    'DIRECTIONS',
    'apply_filter',
    'enabled_filters',
    'haar_subbands',
    'discretize',
    'first_order_features',
    'glcm_features',
    'glrlm_features',
    'shape_features',
]
