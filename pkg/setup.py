import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("KANSYNTH_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        extensions = [
            Extension(
                "kansynth._kernels",
                ["src/kansynth/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # fused multiply-add would break bitwise parity with the fallback
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )

setup(ext_modules=ext_modules)
