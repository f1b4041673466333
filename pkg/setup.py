"""Package configuration"""

import os
from setuptools import setup, find_packages


VERSION = "0.3.0"


README = """
complexray
==========

Explicit inversion of ray transforms over integral curves of planar vector fields.

Install
-------

.. code-block:: shell

    pip install complexray

Run
----

.. code-block:: shell

    complexray validate
    complexray invert --field field.json --phantom phantom.json

"""


with open('HISTORY.rst', encoding='utf-8') as fp:
    HISTORY = fp.read().replace('.. :changelog:', '')


with open(os.path.join('requirements', 'base.in'), encoding='utf-8') as fp:
    REQUIREMENTS = list(fp)


CONSOLE_SCRIPTS = [
    'complexray = complexray.cli:main',
]


setup(
    name='complexray',
    version=VERSION,
    description="Explicit inversion of ray transforms "
                "over curves of planar vector fields",
    long_description=README + '\n\n' + HISTORY,
    author='Peter Demin',
    author_email='peterdemin@gmail.com',
    include_package_data=True,
    packages=find_packages(exclude=['tests']),
    install_requires=REQUIREMENTS,
    python_requires='>=3.8',
    license="MIT",
    zip_safe=False,
    keywords='tomography ray-transform inverse-problems',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Environment :: Console',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: Implementation :: CPython',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    entry_points={
        'console_scripts': CONSOLE_SCRIPTS,
    },
    setup_requires=['setuptools', 'wheel'],
)
