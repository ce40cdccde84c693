# Build the optional compiled jet kernels:
#   pip install -e . --no-build-isolation
# The package falls back to numpy kernels when the extension is absent.
import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "deeppde.autodiff._jetkernels",
        ["src/deeppde/autodiff/_jetkernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
)
