#!/usr/bin/env python3
"""
Setup script for AccentCraft.
"""

from setuptools import setup, find_packages

setup(
    name="accentcraft",
    version="0.1.0",
    description="Few-shot accented speech data pipeline: prosody extraction, "
                "pronunciation editing, evaluation and experiment planning",
    author="AccentCraft Team",
    packages=find_packages(exclude=("tests", "tests.*")),
    include_package_data=True,
    install_requires=[
        "numpy>=1.24",
        "rapidfuzz>=3.0",
        "scipy>=1.10",
        "librosa>=0.10.0",
        "soundfile>=0.12.1",
        "praat-textgrids>=1.4.0",
        "requests>=2.31.0",
        "python-dotenv>=1.0.0",
        "Pillow>=9.5.0",
        "reportlab>=3.6.12",
    ],
    extras_require={
        "test": ["pytest>=7.4", "hypothesis>=6.82"],
    },
    entry_points={
        "console_scripts": [
            "accentcraft=accentcraft.main:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Multimedia :: Sound/Audio :: Speech",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.9",
)
