"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-NumPy fallback is selected
at import time); set RANKREGIONS_SKIP_EXTENSION=1 to skip compilation.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("RANKREGIONS_SKIP_EXTENSION"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "rankregions._kernels",
                sources=["src/rankregions/_kernels.pyx"],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
