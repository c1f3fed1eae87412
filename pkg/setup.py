import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = [
    Extension(
        "rgwalk._kernels",
        ["src/rgwalk/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-fcx-limited-range"],
    ),
]

setup(ext_modules=cythonize(ext_modules, language_level=3))
