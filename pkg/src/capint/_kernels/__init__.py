"""Kernel backend selection.

The compiled Cython core is preferred; the pure-Python/numpy fallback is
selected when the extension is unavailable or CAPINT_FORCE_FALLBACK=1.
Both backends implement the same operations with identical floating-point
operation order, so results are bit-identical.
"""

import os

from . import _fallback

_NAMES = (
    "backend_name",
    "content_batch",
    "content_root_and_tables",
    "integral_batch",
    "dyadic_maximal_batch",
    "dyweak_stats_batch",
    "ball_content_1d",
    "ball_maximal_1d",
    "ball_maximal_1d_uncentered",
)

if os.environ.get("CAPINT_FORCE_FALLBACK", "") == "1":
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        if not all(hasattr(_impl, name) for name in _NAMES):
            _impl = _fallback
    except ImportError:
        _impl = _fallback

backend_name = _impl.backend_name
content_batch = _impl.content_batch
content_root_and_tables = _impl.content_root_and_tables
integral_batch = _impl.integral_batch
dyadic_maximal_batch = _impl.dyadic_maximal_batch
dyweak_stats_batch = _impl.dyweak_stats_batch
ball_content_1d = _impl.ball_content_1d
ball_maximal_1d = _impl.ball_maximal_1d
ball_maximal_1d_uncentered = _impl.ball_maximal_1d_uncentered

fallback = _fallback


def active_backend():
    return _impl.backend_name()
