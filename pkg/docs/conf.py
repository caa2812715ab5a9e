# ruff: noqa: D100 INP001
# Sphinx configuration for the kpca-rff documentation.
# https://www.sphinx-doc.org/en/master/usage/configuration.html
from __future__ import annotations

import importlib.metadata

project = "kpca-rff"
copyright = "2024, kpca-rff developers"  # noqa: A001
author = "kpca-rff developers"
release = importlib.metadata.version(project)
version = ".".join(release.split(".")[:2])

extensions = [
    "myst_parser",
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx.ext.viewcode",
]

exclude_patterns = ["_build"]

# README.md is included as the landing page, its doctest blocks render as plain Python.
myst_enable_extensions = ["dollarmath"]
myst_heading_anchors = 2

html_theme = "furo"
html_title = f"kpca-rff {release}"

intersphinx_mapping = {
    "python": ("https://docs.python.org/3/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "attrs": ("https://www.attrs.org/en/stable/", None),
    "cattrs": ("https://catt.rs/en/stable/", None),
}

autodoc_typehints = "description"
autodoc_member_order = "bysource"
autodoc_default_options = {"members": True, "show-inheritance": True}

# Array aliases stay named instead of expanding to their NDArray definitions.
autodoc_type_aliases = {
    "ArrayLike": "numpy.typing.ArrayLike",
    "NDArray": "numpy.typing.NDArray",
    "FloatArray": "kpca.rff.typing.FloatArray",
    "IndexArray": "kpca.rff.typing.IndexArray",
    "MaybeFloat": "kpca.rff.typing.MaybeFloat",
    "Model": "kpca.rff.evaluate.Model",
}

# Docstrings are Google style throughout.
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_include_init_with_doc = False
napoleon_use_param = True
napoleon_use_rtype = False
napoleon_attr_annotations = True
