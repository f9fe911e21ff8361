"""Build script: compiles the optional fast kernels extension.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so the build is marked optional and a failed
compilation only downgrades performance.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "roughpaths.kernels._fast",
                ["src/roughpaths/kernels/_fast.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
