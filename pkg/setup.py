import numpy
from setuptools import setup

try:
    from Cython.Build import cythonize
    ext_modules = cythonize(
        ["src/thermobilliards/kernels/_core.pyx"],
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        # keep floating point bit-identical to the pure-Python kernels
        ext.extra_compile_args = ["-ffp-contract=off", "-fno-builtin-sin",
                                  "-fno-builtin-cos"]
except ImportError:
    # no Cython: install with the pure-Python kernels only
    ext_modules = []

setup(ext_modules=ext_modules, include_dirs=[numpy.get_include()])
