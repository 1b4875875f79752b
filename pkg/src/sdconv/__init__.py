"""Lossless conversion of strided deconvolution into stride-1 convolutions, with cost models."""

from .reference import (ConvParams, MulCounter, conv2d, deconv2d_oracle, nzp_deconv2d,
                        nzp_expand, rot180)
from .split import (MergeMap, SplitPlan, expand_filter, merge_outputs, pad_input_sd,
                    plan_split, run_split, sd_deconv2d, split_filters)
from .tensor import (FilterBank, LayerKind, LayerSpec, ParseError, ShapeError, Tensor3,
                     read_filter_file, read_tensor_file, tensor_new, write_filter_file,
                     write_tensor_file)

__version__ = "0.1.0"
