"""Build script: the residual kernel is compiled with Cython when possible.

If Cython or a C compiler is unavailable the package still installs and
falls back to the numpy kernel at import time.
"""
import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("mdgice._kernel", ["src/mdgice/_kernel.pyx"],
                   include_dirs=[np.get_include()], extra_compile_args=["-O3"])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
