from pathlib import Path

from setuptools import setup

MODULES = [p.stem for p in (Path(__file__).parent / "src").glob("*.py")]

setup(
    name="dmqam-sim",
    version="1.0.0",
    description="Directional-modulation M-QAM precoder design and link simulation",
    python_requires=">=3.9",
    package_dir={"": "src"},
    py_modules=MODULES,
    install_requires=[
        "numpy>=1.26",
        "scipy>=1.11",
        "pyyaml>=6.0",
        "matplotlib>=3.7",
    ],
    extras_require={"test": ["pytest>=7.4", "pytest-cov>=4.1"]},
    entry_points={"console_scripts": ["dmqam-sim=sim_launcher:main"]},
)
