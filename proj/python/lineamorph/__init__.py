"""Linea alba morphometry: phantoms, measurement, interpolation and statistics."""

from ._lineamorph import (
    LandmarkSet,
    VoxelMask,
    anova,
    dice,
    generate_phantom,
    interpolate,
    kruskal_wallis,
    landmarks_dict,
    load_landmarks,
    load_mask,
    mann_whitney,
    measure,
    pearson_matrix,
    render_mesh,
    save_landmarks,
    save_mask,
    shapiro_wilk,
    subsample,
    summarize,
    t_test,
    uniform_slice_selection,
    validate_mask,
)

__all__ = [
    "LandmarkSet",
    "VoxelMask",
    "anova",
    "dice",
    "generate_phantom",
    "interpolate",
    "kruskal_wallis",
    "landmarks_dict",
    "load_landmarks",
    "load_mask",
    "mann_whitney",
    "measure",
    "pearson_matrix",
    "render_mesh",
    "save_landmarks",
    "save_mask",
    "shapiro_wilk",
    "subsample",
    "summarize",
    "t_test",
    "uniform_slice_selection",
    "validate_mask",
]
