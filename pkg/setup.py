"""Build shim: compiles the optional convolution kernel when Cython and a C
toolchain are available, and degrades to the pure-Python kernel otherwise."""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    # a failed kernel build must not fail the install
    def run(self):
        try:
            super().run()
        except Exception as exc:
            warnings.warn(f"compiled kernel not built ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernel not built ({exc}); using pure-Python fallback")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension(name="hilok._corec", sources=["src/hilok/_corec.pyx"])],
        language_level="3",
    )
except Exception as exc:  # Cython missing or cythonize failed
    warnings.warn(f"compiled kernel not cythonized ({exc}); using pure-Python fallback")
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
