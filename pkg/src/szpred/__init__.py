"""EEG seizure prediction: MSPCA denoising, wavelet-packet features,
Rotation Forest classification, and a miniature MapReduce runtime with
serial, threaded, and distributed executors."""

import numpy as _np  # noqa: F401  (must be loaded before the BLAS pin below)
from threadpoolctl import threadpool_limits as _threadpool_limits

# BLAS pools are pinned to one thread for the life of the process
# (threadpoolctl only sees libraries that are already loaded, hence the
# numpy import above). Results must be bit-identical across executors and
# worker counts, and multithreaded BLAS changes summation order (and, on
# these small per-chunk matrices, is a measured slowdown anyway).
# Parallelism comes from the executors, not from nested BLAS threading.
_BLAS_PIN = _threadpool_limits(limits=1, user_api="blas")

__version__ = "0.1.0"
