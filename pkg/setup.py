from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off keeps the compiled kernel numerically identical to the
# pure-Python fallback (no FMA contraction), which the parity tests rely on.
extensions = [
    Extension(
        "phonodot._kernel._core",
        ["src/phonodot/_kernel/_core.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
