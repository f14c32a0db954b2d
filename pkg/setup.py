import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("SCDSIM_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext = Extension(
            "scdsim._kernels",
            ["src/scdsim/_kernels.pyx"],
            include_dirs=[np.get_include()],
            language="c++",
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O2", "-ffp-contract=off", "-std=c++11"],
        )
        ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
    except ImportError as exc:  # pure-Python install
        print(f"scdsim: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
