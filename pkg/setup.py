"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so a failing compiler is downgraded to a warning.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            warnings.warn(f"kernel extension build failed ({exc}); "
                          "falling back to the pure NumPy kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); "
                          "falling back to the pure NumPy kernels")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "nehari._kernels._core",
        ["src/nehari/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
