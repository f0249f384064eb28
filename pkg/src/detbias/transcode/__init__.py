from .jpegcodec import decode_jpeg, encode_qf, rgb_to_ycc, ycc_to_rgb
from .ops import (
    CompressionSeries,
    center_crop,
    compress_series,
    decode,
    infer_preprocess,
    resize_bilinear,
    train_preprocess,
)
from .pngcodec import decode_png, write_png
from .raster import Raster, quantize_u8

__all__ = [
    "CompressionSeries",
    "Raster",
    "center_crop",
    "compress_series",
    "decode",
    "decode_jpeg",
    "decode_png",
    "encode_qf",
    "infer_preprocess",
    "quantize_u8",
    "resize_bilinear",
    "rgb_to_ycc",
    "train_preprocess",
    "write_png",
    "ycc_to_rgb",
]
