import os

import numpy as np
from setuptools import Extension, setup

extensions = []
if not os.environ.get("HAMSTAB_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:  # fall back to the numpy kernel
        cythonize = None
    if cythonize is not None:
        extensions = cythonize(
            [
                Extension(
                    "hamstab._kernels._ckernel",
                    ["src/hamstab/_kernels/_ckernel.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=extensions)
