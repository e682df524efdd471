import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off keeps the compiled kernels bit-identical to the pure
# Python fallback (no FMA contraction of a*b+c).
extensions = [
    Extension(
        "wanderseg._kernels_cy",
        ["src/wanderseg/_kernels_cy.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
