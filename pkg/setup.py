import setuptools
import os

name = 'parid'
here = os.path.abspath(os.path.dirname(__file__))

with open(os.path.join(here, 'README.md')) as f:
    long_description = f.read()

version_info = {}
with open(os.path.join(here, name, 'version_info.py')) as fp:
    exec(fp.read(), version_info)
version = version_info['_version']


install_requires = [
    'numpy>=1.17',
    'scipy',
    'scikit-learn'
]

console_scripts = [
    'parid=parid:cli_main'
]

entry_points = dict(console_scripts=console_scripts)

packages = [
    f'{name}',
    f'{name}.threading'
]

setuptools.setup(
    name='parid',
    python_requires='>=3.6',
    packages=packages,
    version=f'{version}',
    description='Re-identification of individual animals from their fur, skin or spot patterns',
    long_description=long_description,
    long_description_content_type='text/markdown',
    license='Public domain',
    install_requires=install_requires,
    tests_require=['nose2'],
    test_suite='nose2.collector.collector',
    entry_points=entry_points
)
