"""Builds the optional compiled step kernel.

The package works without it (the numpy fallback is selected at import);
any failure to cythonize or compile downgrades to a pure-Python install.
"""

import numpy as np
from setuptools import Extension, setup

extensions = [
    Extension(
        "nnlif._stepper_cy",
        ["src/nnlif/_stepper_cy.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
