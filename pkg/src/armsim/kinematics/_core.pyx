# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kinematics kernels.

Mirror of ``pure.py`` -- same signatures, same formulas, same branch
conventions.  Any change here must be applied there as well.
"""

from libc.math cimport cos, sin, acos, atan2, sqrt, fabs, pi

cdef double _DEG = pi / 180.0


def scara_fk(double l1, double l2, double shoulder, double elbow,
             double z_slide, double wrist):
    cdef double a1 = shoulder * _DEG
    cdef double a12 = (shoulder + elbow) * _DEG
    cdef double x = l1 * cos(a1) + l2 * cos(a12)
    cdef double y = l1 * sin(a1) + l2 * sin(a12)
    return (x, y, z_slide, wrist)


def scara_ik(double l1, double l2, double x, double y, double z,
             double rotation):
    cdef double r2 = x * x + y * y
    cdef double c = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    if c > 1.0:
        if c > 1.0 + 1e-9:
            return None
        c = 1.0
    elif c < -1.0:
        if c < -1.0 - 1e-9:
            return None
        c = -1.0
    cdef double elbow = -acos(c)
    cdef double shoulder = atan2(y, x) - atan2(
        l2 * sin(elbow), l1 + l2 * cos(elbow))
    return (shoulder / _DEG, elbow / _DEG, z, rotation)


cdef int _delta_arm_ik(double rb, double re, double rf, double rl,
                       double x, double y, double z, double* out):
    cdef double xo = x - (rb - re)
    cdef double k = rl * rl - rf * rf - xo * xo - y * y - z * z
    cdef double a = -2.0 * rf * xo
    cdef double b = 2.0 * rf * z
    cdef double h = sqrt(a * a + b * b)
    if h < 1e-12:
        return 0
    cdef double q = k / h
    if q > 1.0:
        if q > 1.0 + 1e-9:
            return 0
        q = 1.0
    elif q < -1.0:
        if q < -1.0 - 1e-9:
            return 0
        q = -1.0
    out[0] = atan2(b, a) + acos(q)
    return 1


def delta_ik(double rb, double re, double rf, double rl, double base_height,
             double x, double y, double z, double rotation):
    cdef double zd = z - base_height
    cdef double thetas[3]
    cdef double phis[3]
    phis[0] = 0.0
    phis[1] = 120.0
    phis[2] = 240.0
    cdef int i
    cdef double p, cp, sp, xa, ya, t
    for i in range(3):
        p = phis[i] * _DEG
        cp = cos(p)
        sp = sin(p)
        xa = cp * x + sp * y
        ya = -sp * x + cp * y
        if not _delta_arm_ik(rb, re, rf, rl, xa, ya, zd, &t):
            return None
        thetas[i] = t / _DEG
    return (thetas[0], thetas[1], thetas[2], rotation)


def delta_fk(double rb, double re, double rf, double rl, double base_height,
             double t1, double t2, double t3, double wrist):
    cdef double ts[3]
    cdef double phis[3]
    cdef double cx[3]
    cdef double cy[3]
    cdef double cz[3]
    ts[0] = t1
    ts[1] = t2
    ts[2] = t3
    phis[0] = 0.0
    phis[1] = 120.0
    phis[2] = 240.0
    cdef int i
    cdef double tr, ex, ez, p
    for i in range(3):
        tr = ts[i] * _DEG
        ex = rb + rf * cos(tr) - re
        ez = -rf * sin(tr)
        p = phis[i] * _DEG
        cx[i] = cos(p) * ex
        cy[i] = sin(p) * ex
        cz[i] = ez
    cdef double x1 = cx[0], y1 = cy[0], z1 = cz[0]
    cdef double a11 = 2.0 * (cx[1] - x1)
    cdef double a12 = 2.0 * (cy[1] - y1)
    cdef double a13 = 2.0 * (cz[1] - z1)
    cdef double b1 = (cx[1] * cx[1] + cy[1] * cy[1] + cz[1] * cz[1]) - (
        x1 * x1 + y1 * y1 + z1 * z1)
    cdef double a21 = 2.0 * (cx[2] - x1)
    cdef double a22 = 2.0 * (cy[2] - y1)
    cdef double a23 = 2.0 * (cz[2] - z1)
    cdef double b2 = (cx[2] * cx[2] + cy[2] * cy[2] + cz[2] * cz[2]) - (
        x1 * x1 + y1 * y1 + z1 * z1)
    cdef double det = a11 * a22 - a12 * a21
    if fabs(det) < 1e-12:
        return None
    cdef double px = (a22 * b1 - a12 * b2) / det
    cdef double qx = -(a22 * a13 - a12 * a23) / det
    cdef double py = (a11 * b2 - a21 * b1) / det
    cdef double qy = -(a11 * a23 - a21 * a13) / det
    cdef double qa = qx * qx + qy * qy + 1.0
    cdef double qb = 2.0 * (qx * (px - x1) + qy * (py - y1) - z1)
    cdef double qc = (px - x1) * (px - x1) + (py - y1) * (py - y1) + z1 * z1 - rl * rl
    cdef double disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return None
    cdef double zd = (-qb - sqrt(disc)) / (2.0 * qa)
    return (px + qx * zd, py + qy * zd, zd + base_height, wrist)
