from setuptools import setup
from setuptools import find_packages

version_py = "FloqSpec/_version.py"
exec(open(version_py).read())

setup(
    name="floqspec",
    version=__version__,
    description="Floquet data, spectral bands and resolvents of periodic canonical systems.",
    long_description="Monodromy, discriminant, band edges, Green's function and resolvent for "
                     "J u' + q u = lambda w u with periodic measure coefficients (atoms plus "
                     "piecewise-constant densities).",
    packages=find_packages(exclude=["tests", "examples"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "pandas",
        "scipy",
    ],
    extras_require={
        "test": ["pytest"],
    },
    entry_points={
        "console_scripts": [
            "FloqSpec = FloqSpec.Cli:main",
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    zip_safe=False,
)
