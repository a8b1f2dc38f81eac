"""Python bindings for the xrcn CNN library."""

from ._xrcn import (
    CLASS_NAMES,
    IMAGE_SIZE,
    DataError,
    Dataset,
    Error,
    InvalidArgument,
    Model,
    ModelFormatError,
    NonFiniteError,
    ShapeError,
    TrainConfig,
    conv2d_forward,
    decode_and_resize,
    grad_check,
    load_dataset,
    maxpool2,
    metrics_to_csv,
    param_count,
    reference_arch,
    render_curves_svg,
    synth_generate,
    train,
)

__all__ = [
    "CLASS_NAMES",
    "IMAGE_SIZE",
    "DataError",
    "Dataset",
    "Error",
    "InvalidArgument",
    "Model",
    "ModelFormatError",
    "NonFiniteError",
    "ShapeError",
    "TrainConfig",
    "conv2d_forward",
    "decode_and_resize",
    "grad_check",
    "load_dataset",
    "maxpool2",
    "metrics_to_csv",
    "param_count",
    "reference_arch",
    "render_curves_svg",
    "synth_generate",
    "train",
]
