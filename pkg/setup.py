import numpy
from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        Extension("coset_chains._core", ["src/coset_chains/_core.pyx"],
                  include_dirs=[numpy.get_include()], extra_compile_args=["-O3"],
                  define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")]),
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # without Cython the package still works on the numpy fallback
    ext_modules = []

setup(ext_modules=ext_modules)
