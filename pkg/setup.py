from setuptools import find_packages, setup

setup(
    name='dynamic-pca',
    version='0.1',
    license='MIT',
    description='Dynamic PCA bounding boxes with closed-form covariance updates',
    platforms='any',
    classifiers=[
        'Intended Audience :: Developers',
        'Intended Audience :: Science/Research',
        'Operating System :: OS Independent',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
    ],
    packages=find_packages(exclude=['tests', 'tests.*']),
    install_requires=['numpy>=1.17', 'flask>=1', 'click>=7'],
    entry_points={
        'console_scripts': ['dynamic-pca = dynamic_pca.commands:main']
    },
    test_suite='tests',
    tests_require=['pytest'],
)
