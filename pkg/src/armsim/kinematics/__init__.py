"""Kinematics kernel selector.

Prefers the compiled Cython kernel, falls back to the pure-Python twin.
Set ``ARMSIM_PURE_KINEMATICS=1`` to force the fallback (used by the
benchmark and the parity tests).
"""

import os

from . import pure as _pure

if os.environ.get("ARMSIM_PURE_KINEMATICS"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

scara_fk = _impl.scara_fk
scara_ik = _impl.scara_ik
delta_fk = _impl.delta_fk
delta_ik = _impl.delta_ik

__all__ = ["BACKEND", "scara_fk", "scara_ik", "delta_fk", "delta_ik", "pure"]
