"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time); any build failure here downgrades to a pure-Python
install instead of aborting.
"""

from setuptools import setup, Extension
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler and friends
            print(f"smalldev: skipping compiled kernels ({exc}); "
                  "falling back to pure python")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"smalldev: failed to build {ext.name} ({exc}); "
                  "falling back to pure python")


ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "smalldev._kernels._fast",
                sources=["src/smalldev/_kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )
except ImportError as exc:
    print(f"smalldev: Cython/numpy unavailable at build time ({exc}); "
          "installing pure-python package")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
