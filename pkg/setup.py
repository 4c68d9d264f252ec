"""Build script for the optional compiled kinematics kernel.

The package works without the extension (a pure-Python twin is selected at
import time), so a failed compile degrades gracefully instead of blocking
installation.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("armsim.kinematics._core", ["src/armsim/kinematics/_core.pyx"])],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
