"""Build script.

The compiled extension is optional: if Cython or a C compiler is
unavailable the package installs in pure-Python form and selects the
NumPy fallback kernels at import time.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "mvtsk._kernels",
                sources=["src/mvtsk/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    sys.stderr.write(f"mvtsk: skipping compiled kernels ({exc!r}); "
                     "pure-Python backend will be used\n")

setup(ext_modules=ext_modules)
