"""Build script.

The package is pure Python except for an optional Cython extension with the
two hot kernels (all-pairs tree tables and the wreath convolution counter).
If Cython or a C compiler is unavailable the build silently falls back to the
numpy implementations in ``lorentree._kernels_py``.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        [
            Extension(
                "lorentree._kernels",
                ["src/lorentree/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": 3},
    )
except Exception:  # pragma: no cover - environment without Cython/cc
    ext_modules = []

setup(ext_modules=ext_modules)
