"""Build script for the compiled kernel extension.

The package works without the extension; epirays._kernels falls back to
numpy implementations when the compiled module is absent.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "epirays._kernels._ext",
                ["src/epirays/_kernels/_ext.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
