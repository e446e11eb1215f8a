# --------------------------------------------
# Setup file for the package
# --------------------------------------------

import os
from setuptools import setup, find_packages


# --------------------
# Initialization
# --------------------

VERSION_NUMBER = '0.1.0'

# required if you want to run the tests
# pip install 'evmotion[test]'
TEST_REQUIRE = ['pytest']

# --------------------
# Setup
# --------------------


def read_file(fname):
    "Read a local file"
    return open(os.path.join(os.path.dirname(__file__), fname)).read()


setup(
    name='evmotion',
    version=VERSION_NUMBER,
    description="Ego-motion compensation and independent motion "
                "tracking for event cameras",
    long_description=read_file('README.md'),
    long_description_content_type='text/markdown',
    keywords='event camera dvs motion compensation tracking',
    license='MIT',
    python_requires='>=3.9',
    install_requires=[
        'numpy',
        'scipy>=1.7',
        'Pillow',
        'jinja2',
        'termcolor',
        'pyyaml',
    ],
    extras_require={
        'test': TEST_REQUIRE,
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering :: Image Recognition',
    ],
    include_package_data=True,
    packages=find_packages(exclude=['test', 'test.*']),
    entry_points={
        'console_scripts': [
            'evmotion = evmotion.cli:main'
        ]
    }
)
