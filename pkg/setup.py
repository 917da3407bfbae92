from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="corr-mfg",
    version="1.0.0",
    description="Solvers for mean-field teams and games with correlated types",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="MIT",
    author="corr-mfg developers",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    package_data={"corrmfg": ["models/*.json"]},
    include_package_data=True,
    python_requires=">=3.8",
    install_requires=[
        "numpy",
        "scipy",
        "tqdm",
        "pandas",
    ],
    extras_require={
        "dev": ["pytest"],
    },
    entry_points={
        "console_scripts": [
            "corrmfg = corrmfg.cli.main:main",
            "corrmfg-solve-team = corrmfg.cli.solve_team:main",
            "corrmfg-solve-mfe = corrmfg.cli.solve_mfe:main",
            "corrmfg-verify = corrmfg.cli.verify:main",
            "corrmfg-simulate = corrmfg.cli.simulate:main",
            "corrmfg-assemble = corrmfg.cli.assemble:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
