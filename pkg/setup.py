from setuptools import Extension, setup

ext_modules = [
    Extension(
        "perphylo._speedups",
        sources=["src/perphylo/_speedups.pyx"],
    )
]

if __name__ == "__main__":
    from Cython.Build import cythonize

    setup(ext_modules=cythonize(ext_modules, language_level="3"))
