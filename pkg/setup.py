"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time), so compilation failures are tolerated.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "vaxlens._kernels._ctree",
                ["src/vaxlens/_kernels/_ctree.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: the fallback backend must match the
                # compiled backend bit for bit, so FMA contraction is banned.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
