"""Build the optional compiled kernels; the package falls back to pure Python without them."""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("CDIMLAB_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext = Extension(
            "cdimlab._kernels",
            ["src/cdimlab/_kernels.pyx"],
            include_dirs=[np.get_include()],
            language="c++",
            # identical rounding to the Python fallback (no fused multiply-add)
            extra_compile_args=["-O3", "-ffp-contract=off"],
        )
        ext_modules = cythonize(
            [ext], compiler_directives={"language_level": 3, "boundscheck": False, "wraparound": False}
        )

setup(ext_modules=ext_modules)
