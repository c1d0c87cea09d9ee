"""Builds the rulesolve_py extension by delegating to cargo.

Neither maturin nor setuptools-rust is assumed; the cdylib produced by
`cargo build -p rulesolve-py` is copied to wherever setuptools wants the
extension module.
"""

import os
import shutil
import subprocess
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CargoExtension(Extension):
    def __init__(self, name, package):
        super().__init__(name, sources=[])
        self.package = package


class CargoBuildExt(build_ext):
    def build_extension(self, ext):
        root = os.path.dirname(os.path.abspath(__file__))
        subprocess.run(
            ["cargo", "build", "-p", ext.package],
            cwd=root,
            check=True,
        )
        target = os.environ.get("CARGO_TARGET_DIR", os.path.join(root, "target"))
        if sys.platform == "darwin":
            lib = f"lib{ext.name}.dylib"
        elif sys.platform == "win32":
            lib = f"{ext.name}.dll"
        else:
            lib = f"lib{ext.name}.so"
        built = os.path.join(target, "debug", lib)
        dest = self.get_ext_fullpath(ext.name)
        os.makedirs(os.path.dirname(dest), exist_ok=True)
        shutil.copyfile(built, dest)


setup(
    ext_modules=[CargoExtension("rulesolve_py", "rulesolve-py")],
    cmdclass={"build_ext": CargoBuildExt},
)
