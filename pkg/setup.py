"""Build script: compiles the optional trajectory-stepping extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time); any failure here therefore downgrades to a warning
instead of aborting the install.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "qspec._ckernel",
                sources=["src/qspec/_ckernel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - exercised only without a toolchain
    warnings.warn(f"building without the compiled trajectory kernel: {exc}")

setup(ext_modules=ext_modules)
