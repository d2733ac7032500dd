"""Build script for the optional Cython kernel extension.

The package works without the extension (a pure-Python twin of every
kernel ships in cirsqrt.kernels._ref); building it just makes the hot
recursions roughly two orders of magnitude faster.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "cirsqrt.kernels._fast",
                ["src/cirsqrt/kernels/_fast.pyx"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
