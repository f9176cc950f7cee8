import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SCENVER_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        # Pure-Python kernels are selected at import time when the extension is absent.
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "scenver.kernels._ckernels",
                    ["src/scenver/kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
