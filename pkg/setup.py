"""Build the optional Cython kernels. The package still works without them."""
import os
import sys

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SARCOV_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("Cython not available; installing the pure-Python kernels only", file=sys.stderr)
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "sarcov._ckernels",
                    ["src/sarcov/_ckernels.pyx"],
                    extra_compile_args=["-O3", "-ffp-contract=off"] if sys.platform != "win32" else ["/O2"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
