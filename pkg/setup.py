"""Build script: compiles the Cython kernel core when a toolchain is present.

The extension is marked optional, so environments without Cython or a C
compiler still install cleanly and fall back to the pure-Python kernels
(see ctr.kernels).
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "ctr._ckernels",
                ["src/ctr/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
    for ext in extensions:
        ext.optional = True
except ImportError:
    extensions = []

setup(ext_modules=extensions)
