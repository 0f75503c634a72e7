from setuptools import Extension, setup

ext_modules = [
    Extension(
        "meanforce.xlinalg._ddkernel",
        sources=["src/meanforce/xlinalg/_ddkernel.pyx"],
    )
]

if __name__ == "__main__":
    from Cython.Build import cythonize
    import numpy as np

    setup(
        ext_modules=cythonize(ext_modules, language_level="3"),
        include_dirs=[np.get_include()],
    )
