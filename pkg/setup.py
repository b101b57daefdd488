"""Build script: compiles the optional native kernel module.

The package is fully functional without the extension; gazedp.kernels
falls back to the NumPy implementations when gazedp._native is missing.
Set GAZEDP_NO_EXTENSION=1 to skip the build entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the accelerator if possible, otherwise install pure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._skip(exc)

    @staticmethod
    def _skip(exc):
        print(f"gazedp: native kernel build skipped ({exc}); "
              "the NumPy fallback will be used", file=sys.stderr)


ext_modules = []
if os.environ.get("GAZEDP_NO_EXTENSION") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        # -ffp-contract=off keeps the C loops bit-identical to the NumPy
        # fallback (no FMA contraction of a*b+c).
        compile_args = []
        if not sys.platform.startswith("win"):
            compile_args = ["-O3", "-ffp-contract=off"]
        ext_modules = cythonize(
            [
                Extension(
                    "gazedp._native",
                    ["src/gazedp/_native.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=compile_args,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError as exc:
        OptionalBuildExt._skip(exc)

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
