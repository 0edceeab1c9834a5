"""Build script for the optional compiled kernel core.

The package works without the extension: qvtad.ndcompute falls back to the
numpy kernels when `qvtad.ndcompute._kernels_cy` is missing. Extension build
failures are therefore demoted to a warning instead of aborting the install.
"""

import os
import sys

from setuptools import setup

_PYX = "src/qvtad/ndcompute/_kernels_cy.pyx"


def _extensions():
    if not os.path.exists(_PYX):
        print("qvtad: no kernel source, skipping compiled kernels", file=sys.stderr)
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"qvtad: skipping compiled kernels ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "qvtad.ndcompute._kernels_cy",
        [_PYX],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=_extensions())
