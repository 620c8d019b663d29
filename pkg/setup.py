"""Build script: compiles the optional fused-kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so any failure here degrades to a pure-Python
install instead of aborting it.
"""

import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("POREFLOW_SKIP_EXT", "") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "poreflow.backends._fused",
                    ["src/poreflow/backends/_fused.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3", "-fopenmp"],
                    extra_link_args=["-fopenmp"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError as exc:
        print(f"poreflow: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
