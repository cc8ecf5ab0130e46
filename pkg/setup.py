"""Build the compiled kernel extension.

Set APNA_SKIP_EXT=1 to install without the extension; the package then
falls back to the pure-Python kernel at import time.
"""
import os

from setuptools import Extension, setup

if os.environ.get("APNA_SKIP_EXT") == "1":
    ext_modules = []
else:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "apna._ckernel",
                ["src/apna/_ckernel.pyx"],
                libraries=["crypto", "sodium"],
                extra_compile_args=["-O2", "-Wno-deprecated-declarations"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
