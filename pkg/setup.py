"""
Setup script for the tsvar Python package.
"""

from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [line.strip() for line in fh if line.strip() and not line.startswith("#")]

setup(
    name="tsvar",
    version="0.1.0",
    author="tsvar Contributors",
    description="Calculus of variations on time scales: delta calculus, Euler-Lagrange and transversality checks",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=requirements,
    entry_points={
        "console_scripts": [
            "tsvar=tsvar.cli:cli",
        ],
    },
    include_package_data=True,
    package_data={
        "tsvar": ["schema/*.json", "data/*.json", "data/golden/*.json"],
    },
    keywords="calculus of variations, time scales, delta derivative, euler-lagrange, transversality",
)
