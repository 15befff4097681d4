from setuptools import setup, find_packages

setup(
    name='tsot-sa-asr',
    version='0.1.0',
    description="Потоковое многодикторное распознавание речи с атрибуцией дикторов на основе t-SOT",
    packages=find_packages(include=['src', 'src.*']),
    python_requires='>=3.9',
    install_requires=[
        'numpy>=1.24',
        'scipy>=1.10',
        'scikit-learn>=1.3',
        'torch>=2.0',
        'editdistance>=0.6',
        'matplotlib>=3.7',
        'python-dotenv>=1.0',
        'psutil>=5.9',
    ],
    extras_require={'test': ['pytest>=7.4']},
    entry_points={'console_scripts': ['tsot=src.main:main']},
)
