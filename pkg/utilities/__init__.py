"""
Utilities - binary / CSV tensor containers and dataset manifests

Import directly from the submodule as needed:
    from utilities.tensor_io import read_logits, write_logits
    from utilities.tensor_io import read_manifest, write_manifest
"""

__all__ = [
    # Logit files
    "read_logits",
    "write_logits",
    # Generic float64 matrices
    "read_matrix",
    "write_matrix",
    # Manifests and checksums
    "read_manifest",
    "write_manifest",
    "crc32_file",
]

__version__ = "1.0.0"


# Lazy imports to avoid circular dependencies
def __getattr__(name):
    """Lazy import tensor_io so that importing the package stays cheap."""
    if name in __all__:
        from utilities import tensor_io
        return getattr(tensor_io, name)
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")
