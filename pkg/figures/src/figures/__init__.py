"""Figure rendering for topoveil experiment CSVs.

Reads only the documented CSV schemas (tau sweep, method comparison,
noise comparison) and renders one image per panel plus a combined
figure.  Rendering is deterministic: fixed fonts, sizes, and stripped
volatile metadata, so re-rendering the same inputs is byte-identical.
"""

__version__ = "0.1.0"

from .render import (
    FigureSpec,
    MissingInput,
    Panel,
    SchemaMismatch,
    default_spec_toml,
    load_spec,
    render,
)

__all__ = [
    "FigureSpec",
    "MissingInput",
    "Panel",
    "SchemaMismatch",
    "default_spec_toml",
    "load_spec",
    "render",
    "__version__",
]
