"""Build script for the optional compiled kernels.

The package works without the extension (a pure-Python fallback is selected
at import time); the extension only accelerates the per-vertex sampling
loops.  If Cython or numpy headers are unavailable the build degrades to
pure Python instead of failing.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "gwmaxdeg._speedups",
                ["src/gwmaxdeg/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
