"""Rain-robust optical flow: residue channel, layer decomposition, rain renderer."""

from ._rainflow import (
    ConfigError,
    DimensionError,
    IoError,
    NumericalError,
    config_keys,
    count_edges,
    endpoint_error,
    estimate,
    flow_to_color,
    l0_smooth,
    make_background,
    read_flo,
    read_image,
    render_pair,
    residue_channel,
    set_thread_count,
    weight_map,
    write_flo,
    write_image,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "IoError",
    "NumericalError",
    "config_keys",
    "count_edges",
    "endpoint_error",
    "estimate",
    "flow_to_color",
    "l0_smooth",
    "make_background",
    "read_flo",
    "read_image",
    "render_pair",
    "residue_channel",
    "set_thread_count",
    "weight_map",
    "write_flo",
    "write_image",
]
