"""Build the optional compiled kernels; installation proceeds without them on failure."""

import logging

from setuptools import setup
from setuptools.command.build_ext import build_ext

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "edgedelta._ckernels",
                ["src/edgedelta/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
        quiet=True,
    )
except ImportError:
    logging.warning("Cython or numpy unavailable; installing the pure-Python kernels only")


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:
            logging.warning("compiled kernels skipped: %s", exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            logging.warning("compiled kernel %s skipped: %s", ext.name, exc)


setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
