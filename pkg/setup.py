"""
Setup script for EllSpin
"""
from setuptools import setup, find_packages
from pathlib import Path

# Read README
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text()

# Read requirements
requirements = [
    line.split("#")[0].strip() for line in (this_directory / "requirements.txt").read_text().splitlines()
    if line.strip() and not line.startswith("#")
]
dev_requirements = [
    line for line in (this_directory / "requirements-dev.txt").read_text().splitlines()
    if line.strip() and not line.startswith(("#", "-r"))
]

setup(
    name="ellspin",
    version="1.0.0",
    author="EllSpin Contributors",
    description="Numerical laboratory for the deformed Inozemtsev spin chain and dynamical elliptic spin-Ruijsenaars operators",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    py_modules=["cli"],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
    python_requires=">=3.10",
    install_requires=requirements,
    extras_require={
        "dev": dev_requirements,
    },
    entry_points={
        "console_scripts": [
            "ellspin=cli:main",
        ],
    },
)
