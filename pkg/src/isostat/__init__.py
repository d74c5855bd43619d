"""Invariants and isostatistical embeddings of statistical manifolds.

``ISOSTAT_THREADS`` (0 = auto) caps the BLAS worker threads when it is set
before the first import of numpy.
"""

import os as _os

__version__ = "0.1.0"


def _apply_thread_cap() -> None:
    raw = _os.environ.get("ISOSTAT_THREADS", "").strip()
    if not raw.isdigit() or int(raw) == 0:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(var, raw)


_apply_thread_cap()
