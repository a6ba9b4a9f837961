import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # Pure-python kernels are selected at import time when the extension
    # is missing, so a Cython-less build still produces a working package.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "swsynth._kernels",
                ["src/swsynth/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                language="c++",
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
