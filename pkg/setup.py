import os

from setuptools import setup

ext_modules = []
if not os.environ.get("NFT_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(["src/nftiles/_kernels.pyx"], language_level=3)

setup(ext_modules=ext_modules)
