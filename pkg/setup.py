import os

from setuptools import Extension, setup

# The compiled kernels are optional: aoreg.kernels falls back to the NumPy
# implementations when the extension is missing (set AOREG_PURE_PYTHON=1 to
# skip the build deliberately).
ext_modules = []
if os.environ.get("AOREG_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("aoreg._corekernels", ["src/aoreg/_corekernels.pyx"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
