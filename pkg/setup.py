from setuptools import setup, find_packages
import os

# Read the README file
def read_readme():
    readme_path = os.path.join(os.path.dirname(__file__), "README.md")
    if os.path.exists(readme_path):
        with open(readme_path, "r", encoding="utf-8") as fh:
            return fh.read()
    return "Discounted adaptive online convex optimization"

setup(
    name="discounted-oco",
    version="0.3.0",
    author="discounted-oco Contributors",
    description="Discounted adaptive online convex optimization and online conformal prediction, with a reproducible benchmark harness",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    packages=find_packages(include=["discounted_oco", "discounted_oco.*"]),
    include_package_data=True,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=[
        "pydantic>=2.0.0",
        "numpy>=1.22",
        "tomli>=2.0.0; python_version < '3.11'",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "scipy>=1.9",
            "black>=23.0.0",
            "flake8>=6.0.0",
            "mypy>=1.5.0",
            "coverage>=7.0.0",
        ],
    },
    entry_points={
        "console_scripts": ["discounted-oco=discounted_oco.harness.cli:main"],
    },
    keywords="online-learning online-convex-optimization regret ftrl adagrad conformal-prediction",
    zip_safe=False,
)
