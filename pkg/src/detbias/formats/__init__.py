from detbias.formats.jpeg import JpegInfo, parse_jpeg_meta
from detbias.formats.meta import (
    FORMAT_JPEG,
    FORMAT_OTHER,
    FORMAT_PNG,
    GENERATED,
    NATURAL,
    ImageMeta,
    meta_from_obj,
    meta_to_json,
    meta_to_obj,
    read_metas,
    write_metas,
)
from detbias.formats.png import PngInfo, parse_png_meta
from detbias.formats.quant import (
    BASE_CHROMA,
    BASE_LUMA,
    QuantTables,
    estimate_qf,
    scale_tables,
)
from detbias.formats.scan import (
    Labels,
    PathLabeler,
    ScanFailure,
    ScanResult,
    parse_image_bytes,
    scan_corpus,
)

__all__ = [
    "BASE_CHROMA", "BASE_LUMA", "FORMAT_JPEG", "FORMAT_OTHER", "FORMAT_PNG",
    "GENERATED", "NATURAL", "ImageMeta", "JpegInfo", "Labels", "PathLabeler",
    "PngInfo", "QuantTables", "ScanFailure", "ScanResult", "estimate_qf",
    "meta_from_obj", "meta_to_json", "meta_to_obj", "parse_image_bytes",
    "parse_jpeg_meta", "parse_png_meta", "read_metas", "scale_tables",
    "scan_corpus", "write_metas",
]
