"""Build the optional Cython kernels.

The package imports and runs without them: ``tvha_bench.kernels`` falls back
to the numpy implementation when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("TVHA_BENCH_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "tvha_bench._ckernels",
                    ["src/tvha_bench/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
