# Copyright 2026 The SceneGrammar Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""setup.py for SceneGrammar.

Install for development:

  pip install -e .
"""

from setuptools import find_packages
from setuptools import setup

setup(
    name="scenegrammar",
    version="0.1.0",
    description=("Scene grammars induced from causal structure, with a "
                 "grammar-masked variational autoencoder written in JAX."),
    author="SceneGrammar Authors",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    license="Apache 2.0",
    packages=find_packages(),
    include_package_data=True,
    scripts=["bin/scenegrammar"],
    install_requires=[
        "absl-py",
        "clu",
        "flax>=0.7.1",
        "jax",
        "jaxlib",
        "networkx",
        "numpy",
        "optax",
        "scipy",
        "shapely>=2.0",
        "svgwrite",
        "tensorflow-probability[jax,tf]",
        "tensorflow",
        "tensorboard",
    ],
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    keywords="JAX scene synthesis grammar induction causal discovery VAE",
)
