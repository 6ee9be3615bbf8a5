"""Build script for the optional compiled simulation kernel.

The package is fully functional without the extension: tsgait.backend falls
back to the pure-Python window kernel when `tsgait._fastcore` is missing or
fails to import.  Build in place with:

    python setup.py build_ext --inplace
"""

import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None and os.path.exists("src/tsgait/_fastcore.pyx"):
    extensions = cythonize(
        [
            Extension(
                "tsgait._fastcore",
                ["src/tsgait/_fastcore.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
