"""Build script: compiles the optional C extension for the hot kernels.

The package works without the extension (a numpy fallback is selected at
import time), so a missing compiler only costs speed, not functionality.
"""

import sys
from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "meanfield._kernels",
                ["src/meanfield/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: the fallback lane must reproduce the
                # extension bitwise, so FMA contraction is disabled.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - degraded environments only
    sys.stderr.write(f"meanfield: skipping C extension build ({exc!r}); "
                     "the pure-Python kernels will be used\n")

setup(ext_modules=ext_modules)
