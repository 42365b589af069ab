from setuptools import find_packages, setup

setup(
    name="xlmimo-swipt",
    description=(
        "Power-minimizing SWIPT simulator for modular near-field XL-MIMO arrays "
        "with joint power allocation and subarray activation"
    ),
    version="0.1.1",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    license="BSD",
    entry_points={"console_scripts": "xlmimo-swipt = xlmimo_swipt.__init__:main"},
    packages=find_packages(exclude=["tests"]),
    package_data={"xlmimo_swipt": ["configs/*.json"]},
    install_requires=["numpy>=1.21", "scipy>=1.6"],
    python_requires=">=3.8",
)
