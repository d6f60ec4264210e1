"""Build script: compiles the Cython energy kernels when a toolchain is
available, and falls back to the pure-Python kernels otherwise."""
import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if we can; the package works without it."""

    def run(self):
        try:
            super().run()
        except Exception as err:  # toolchain missing, compile error, ...
            warnings.warn(
                "could not build the compiled kernels (%s); "
                "falling back to the pure-Python implementation" % err
            )

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as err:
            warnings.warn(
                "could not build %s (%s); using pure-Python kernels"
                % (ext.name, err)
            )


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as err:
        warnings.warn("Cython/numpy unavailable (%s); skipping extension" % err)
        return []
    ext = Extension(
        "plaplab._kernels",
        ["src/plaplab/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
