import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("LOWDIM_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "lowdim._kernels",
                    ["src/lowdim/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # no Cython: the package runs on the numpy fallback
        ext_modules = []

setup(ext_modules=ext_modules)
