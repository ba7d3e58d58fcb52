"""Builds the optional compiled shooting kernel; the package works without it."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FRONTSPEED_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("frontspeed._shoot", ["src/frontspeed/_shoot.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
