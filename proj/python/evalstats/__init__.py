"""Standard errors, paired comparisons and power analysis for eval scores."""

import os
import sys

try:
    from . import _evalstats
except ImportError:
    # Development builds: the extension sits in the CMake build tree.
    _ext_dir = os.environ.get("EVALSTATS_EXT_DIR")
    if not _ext_dir:
        raise
    sys.path.insert(0, _ext_dir)
    import _evalstats

globals().update({k: v for k, v in vars(_evalstats).items() if not k.startswith("__")})

__version__ = "0.1.0"
