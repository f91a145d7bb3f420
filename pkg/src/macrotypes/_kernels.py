"""Import-time selection between the compiled and pure-numpy kernels.

Set ``MACROTYPES_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("MACROTYPES_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

quadform_gauss = _impl.quadform_gauss
quadform_gauss_1d = _impl.quadform_gauss_1d
poisson_binomial = _impl.poisson_binomial
sym_power_2 = _impl.sym_power_2

__all__ = ["BACKEND", "quadform_gauss", "quadform_gauss_1d", "poisson_binomial", "sym_power_2"]
