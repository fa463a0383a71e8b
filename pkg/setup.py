"""Build script for the optional compiled simulation kernels.

Set DEPBANDITS_NO_EXT=1 to skip the extension; the package then falls
back to the pure-Python kernels at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("DEPBANDITS_NO_EXT"):
    import numpy
    from Cython.Build import cythonize

    # No -ffast-math: the compiled kernels must stay bit-identical to
    # the pure-Python fallback.
    ext = Extension(
        "depbandits._fast",
        sources=["src/depbandits/_fast.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
