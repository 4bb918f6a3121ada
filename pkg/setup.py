"""Build hook for the optional compiled kernel.

pyproject.toml carries the package metadata; this file only wires up the
Cython extension. When Cython or a C compiler is unavailable the install
proceeds without the extension and the package falls back to the numpy
kernels at import time. Set WPCN_NO_EXTENSION=1 to skip the build.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("WPCN_NO_EXTENSION") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "wpcn._speedups",
                    sources=["src/wpcn/_speedups.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
