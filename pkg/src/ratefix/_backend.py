"""Select the compiled kernels when importable, else the numpy fallback."""

import os

if os.environ.get("RATEFIX_PURE_PYTHON", "") not in ("", "0"):
    from ratefix import _pykernels as kernels
else:
    try:
        from ratefix import _kernels as kernels
    except ImportError:
        from ratefix import _pykernels as kernels

BACKEND = "compiled" if kernels.__name__.endswith("._kernels") else "python"
