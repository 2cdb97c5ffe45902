import io
import re
from setuptools import setup

with io.open('README.md', 'rt') as f:
    readme = f.read()

with io.open('qlstab/__init__.py', 'rt') as f:
    version = re.search(r"__version__ = '(.*?)'", f.read()).group(1)

setup(
    name='qlstab',
    version=version,
    description='Quasi-local stabilization of pure quantum states under Lindblad dynamics.',
    long_description=readme,
    long_description_content_type='text/markdown',
    license='MIT',
    platforms='any',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Operating System :: OS Independent',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    keywords='quantum lindblad dissipation stabilization control',
    packages=['qlstab', 'qlstab.operators'],
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.20',
        'scipy>=1.7',
    ],
    extras_require={'dev': ['pytest', 'hypothesis']},
    entry_points={'console_scripts': ['qlstab=qlstab.cli:main']},
)
