"""Pure-Python kinematics kernels for the SCARA and DELTA arms.

These are the hot per-tick functions of the simulator.  A Cython twin lives
in ``_core.pyx`` with identical signatures and formulas; ``__init__``
selects whichever is available.  Keep both files in sync.

Conventions:
  * angles in degrees at the interface, millimetres for lengths,
  * SCARA joints: (shoulder, elbow, z_slide, wrist),
  * DELTA joints: (theta1, theta2, theta3, wrist); theta measured downward
    from the horizontal base plane; arms at azimuths 0/120/240 deg,
  * unreachable targets return None (wrappers raise).
"""

import math

_DEG = math.pi / 180.0
_DELTA_AZIMUTHS = (0.0, 120.0, 240.0)


def scara_fk(l1, l2, shoulder, elbow, z_slide, wrist):
    a1 = shoulder * _DEG
    a12 = (shoulder + elbow) * _DEG
    x = l1 * math.cos(a1) + l2 * math.cos(a12)
    y = l1 * math.sin(a1) + l2 * math.sin(a12)
    return (x, y, z_slide, wrist)


def scara_ik(l1, l2, x, y, z, rotation):
    """Planar 2-link IK, elbow-right branch (elbow angle <= 0)."""
    r2 = x * x + y * y
    c = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    if c > 1.0:
        if c > 1.0 + 1e-9:
            return None
        c = 1.0
    elif c < -1.0:
        if c < -1.0 - 1e-9:
            return None
        c = -1.0
    elbow = -math.acos(c)
    shoulder = math.atan2(y, x) - math.atan2(
        l2 * math.sin(elbow), l1 + l2 * math.cos(elbow)
    )
    return (shoulder / _DEG, elbow / _DEG, z, rotation)


def _delta_arm_ik(rb, re, rf, rl, x, y, z):
    """Solve one arm in its own frame; returns theta in radians or None."""
    xo = x - (rb - re)
    k = rl * rl - rf * rf - xo * xo - y * y - z * z
    a = -2.0 * rf * xo
    b = 2.0 * rf * z
    h = math.sqrt(a * a + b * b)
    if h < 1e-12:
        return None
    q = k / h
    if q > 1.0:
        if q > 1.0 + 1e-9:
            return None
        q = 1.0
    elif q < -1.0:
        if q < -1.0 - 1e-9:
            return None
        q = -1.0
    # the "+acos" branch keeps the elbow outward for this geometry
    return math.atan2(b, a) + math.acos(q)


def delta_ik(rb, re, rf, rl, base_height, x, y, z, rotation):
    """Three-arm IK; z is table height (maps to base-relative z - H)."""
    zd = z - base_height
    thetas = []
    for phi in _DELTA_AZIMUTHS:
        p = phi * _DEG
        cp = math.cos(p)
        sp = math.sin(p)
        xa = cp * x + sp * y
        ya = -sp * x + cp * y
        t = _delta_arm_ik(rb, re, rf, rl, xa, ya, zd)
        if t is None:
            return None
        thetas.append(t / _DEG)
    return (thetas[0], thetas[1], thetas[2], rotation)


def delta_fk(rb, re, rf, rl, base_height, t1, t2, t3, wrist):
    """Trilateration of the three inward-shifted elbow spheres."""
    cx = []
    cy = []
    cz = []
    for t, phi in zip((t1, t2, t3), _DELTA_AZIMUTHS):
        tr = t * _DEG
        ex = rb + rf * math.cos(tr) - re
        ez = -rf * math.sin(tr)
        p = phi * _DEG
        cx.append(math.cos(p) * ex)
        cy.append(math.sin(p) * ex)
        cz.append(ez)
    x1, y1, z1 = cx[0], cy[0], cz[0]
    a11 = 2.0 * (cx[1] - x1)
    a12 = 2.0 * (cy[1] - y1)
    a13 = 2.0 * (cz[1] - z1)
    b1 = (cx[1] ** 2 + cy[1] ** 2 + cz[1] ** 2) - (x1 * x1 + y1 * y1 + z1 * z1)
    a21 = 2.0 * (cx[2] - x1)
    a22 = 2.0 * (cy[2] - y1)
    a23 = 2.0 * (cz[2] - z1)
    b2 = (cx[2] ** 2 + cy[2] ** 2 + cz[2] ** 2) - (x1 * x1 + y1 * y1 + z1 * z1)
    det = a11 * a22 - a12 * a21
    if abs(det) < 1e-12:
        return None
    px = (a22 * b1 - a12 * b2) / det
    qx = -(a22 * a13 - a12 * a23) / det
    py = (a11 * b2 - a21 * b1) / det
    qy = -(a11 * a23 - a21 * a13) / det
    qa = qx * qx + qy * qy + 1.0
    qb = 2.0 * (qx * (px - x1) + qy * (py - y1) - z1)
    qc = (px - x1) ** 2 + (py - y1) ** 2 + z1 * z1 - rl * rl
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return None
    zd = (-qb - math.sqrt(disc)) / (2.0 * qa)
    return (px + qx * zd, py + qy * zd, zd + base_height, wrist)
