import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("hlwnet.kernels._ckernels", ["src/hlwnet/kernels/_ckernels.pyx"],
                   include_dirs=[np.get_include()], optional=True,
                   extra_compile_args=["-ffp-contract=off"])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
