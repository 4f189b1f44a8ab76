from setuptools import setup, find_packages  # type: ignore

setup(
    name='widthtools',
    version='0.1.0',
    packages=find_packages(exclude=['tests', 'tests.*']),
    install_requires=[
        'numpy',
        'pandas',
        'toml',
        'loguru',
    ],
    include_package_data=True,
    author='Alex Good, Skelectric',
    author_email='alex@agti.net, skelectric@postfiat.org',
    description='Width-based online planning over pixel features',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
    ],
    python_requires='>=3.11',
    entry_points={
        'console_scripts': [
            'widthtools=widthtools.cli:main',
        ],
    },
)
