"""gkzperiods computes limiting periods of Fermat deformations from GKZ Gamma series."""
from pathlib import Path
from setuptools import find_namespace_packages, setup

setup(
    name="gkzperiods",
    version="0.1.0",
    description="Limiting periods of hypersurface degenerations",
    license="MIT",
    packages=find_namespace_packages(include=["gkzperiods", "gkzperiods.*"]),
    include_package_data=True,
    python_requires=">=3.9",
    install_requires=[
        "click",
        "coloredlogs",
        "mpmath",
        "numpy",
        "python-dotenv",
        "sympy",
    ],
    entry_points={"console_scripts": ["gkzperiods=gkzperiods.cli:cli"]},
    long_description=(Path(__file__).parent / "README.md").read_text(),
    long_description_content_type="text/markdown",
)
