from Cython.Build import cythonize
from setuptools import Extension, setup

# No -ffast-math: the compiled kernels must stay bit-compatible with the
# pure-Python fallback (strict IEEE ordering).
extensions = [
    Extension(
        "mvm._cykernels",
        ["src/mvm/_cykernels.pyx"],
        extra_compile_args=["-O2"],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
