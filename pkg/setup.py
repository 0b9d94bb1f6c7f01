"""Build the optional compiled kernels.

The package works without them: ``gausspoly._kernels`` falls back to the
numpy implementations in ``gausspoly._fallback`` when the extension is absent.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("GAUSSPOLY_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "gausspoly._core",
                    ["src/gausspoly/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
