"""Build script for the compiled hash-kernel extension.

The extension links against OpenSSL's libcrypto for the digest primitives.
If it fails to build or import, the package falls back to a pure-Python
implementation of the same kernels (see dsig._backend).
"""

from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "dsig._ckernels",
        ["src/dsig/_ckernels.pyx"],
        libraries=["crypto"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
