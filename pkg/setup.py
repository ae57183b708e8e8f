import setuptools
from Cython.Build import cythonize

setuptools.setup(
    ext_modules=cythonize(
        [
            setuptools.Extension(
                "artexplore.metrics._native",
                ["src/artexplore/metrics/_native.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
    ),
)
