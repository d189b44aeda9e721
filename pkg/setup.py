"""Build the optional Cython kernel.

Setting ``RICCICONE_NO_EXT=1`` skips the extension; the package then runs on
its numpy fallback.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("RICCICONE_NO_EXT"):
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
                    "riccicone._kernels",
                    ["src/riccicone/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3", "boundscheck": False,
                                 "wraparound": False, "cdivision": True},
        )

setup(ext_modules=ext_modules)
