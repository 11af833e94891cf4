"""Radon-CDT transforms and nearest-subspace classification in R-CDT space."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .grids import (Density1D, Density2D, Grid1D, LabeledImageSet, ProjectionGrid, default_projection_grid,
                    make_uniform_reference1d, normalize_to_density1d, normalize_to_density2d)
from .transforms import (CdtFunction, RcdtField, Sinogram, cdt_forward, cdt_inverse, radon_forward, radon_inverse,
                         rcdt_features, rcdt_forward, rcdt_inverse, sw2_distance, translation_spanning_vectors,
                         w2_distance)
from .subspace import (ClassBasis, FitConfig, Model, Prediction, fit, fit_class_subspace, predict,
                       subspace_distance)
from .model_io import load_field, load_model, save_field, save_model
from .data import (ConfoundSpec, SplitPlan, apply_confound, generate_synthetic_dataset, read_idx, sample_splits,
                   write_idx)
from .flops import count_flops
