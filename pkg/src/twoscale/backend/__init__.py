"""Backend selection for the hot numeric kernels.

Two interchangeable implementations exist: :mod:`.numba_impl` (jitted)
and :mod:`.numpy_impl` (pure numpy). Selection happens once at import:

* ``TWOSCALE_BACKEND=numpy``  force the numpy fallback,
* ``TWOSCALE_BACKEND=numba``  require numba (ImportError if missing),
* unset                       prefer numba, fall back to numpy.

Both backends use identical reduction orders; they differ at most in
the last ulp of transcendental functions. ``benchmarks/bench_backends.py``
times one against the other.
"""

import os

_requested = os.environ.get("TWOSCALE_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"TWOSCALE_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    from . import numpy_impl as _impl
elif _requested == "numba":
    from . import numba_impl as _impl
else:
    try:
        from . import numba_impl as _impl
    except ImportError:
        from . import numpy_impl as _impl

NAME = _impl.NAME
PHI_SQUARE = _impl.PHI_SQUARE
PHI_XLOGX = _impl.PHI_XLOGX
PHI_POWER = _impl.PHI_POWER

tree_sum = _impl.tree_sum
weighted_sum = _impl.weighted_sum
mean = _impl.mean
second_moment = _impl.second_moment
variance = _impl.variance
log_mean_exp = _impl.log_mean_exp
phi_values = _impl.phi_values
phi_entropy_core = _impl.phi_entropy_core
entropy_core = _impl.entropy_core
affine_apply = _impl.affine_apply
affine_chain = _impl.affine_chain
