"""Build script: compiles the optional bootstrap kernels.

Set CLUSTERCRIT_PURE=1 to skip the extension entirely; the package then
runs on the pure-numpy kernel backend.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("CLUSTERCRIT_PURE"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "clustercrit._kernels._fast",
                    ["src/clustercrit/_kernels/_fast.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
