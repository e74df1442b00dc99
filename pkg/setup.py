"""Build script: compiles the Haar/soft-threshold kernel extension when Cython
is available; the package falls back to the NumPy kernels otherwise."""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "cloudmri.recon._haar_cy",
                ["src/cloudmri/recon/_haar_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
