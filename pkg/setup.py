from setuptools import setup, find_packages
import pathlib

setup(
    name="GalerkinRKS",
    version="1.0.0",
    description="GalerkinRKS is a Python package for reconstructing signals in reproducing kernel spaces from their nonuniform samples. It builds shifted generator families, samples signals on nonuniform, jittered and crossing-time grids, solves Galerkin and least-squares sub-Galerkin equations directly or by an exponentially convergent iteration, and estimates the stability and admissibility constants that make such reconstructions quasi-optimal.",
    long_description=(pathlib.Path(__file__).parent / "README.md").read_text(),
    long_description_content_type="text/markdown",
    author="Mohammed Insaf M (insafm)",
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    package_data={'galerkinrks': [
        'data/*.json']
    },
    license="GPLv3",
    install_requires=[
        'numpy',
        'scipy',
        'setuptools'
    ],
    extras_require={
        'dev': ["pytest"],
    },
    python_requires='>=3.8'
)
