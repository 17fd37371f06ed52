from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# Compiled elementwise kernels. Optional: the package falls back to the
# pure-numpy implementations when the extension cannot be built.
extensions = [
    Extension(
        "paddle._kernels_c",
        sources=["src/paddle/_kernels_c.pyx"],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, language_level="3") if cythonize else [],
)
