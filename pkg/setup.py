"""Build script: compiles the optional fast kernels.

The package works without the compiled extension (a numpy fallback is
selected at import time), so the extension is marked optional and any
build failure degrades to the pure lane instead of aborting the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy

    extensions = cythonize(
        [
            Extension(
                "shearband._kernels._fast",
                ["src/shearband/_kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
