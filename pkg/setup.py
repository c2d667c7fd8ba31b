import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("BESOVLAB_NO_EXT", "") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        Extension(
            "besovlab._kernels",
            ["src/besovlab/_kernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3", "-ffp-contract=off"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        ),
        language_level=3,
    )

setup(ext_modules=ext_modules)
