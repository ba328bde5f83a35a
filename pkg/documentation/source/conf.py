# Configuration file for the Sphinx documentation builder.
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import os
import sys

sys.path.insert(0, os.path.abspath("../../"))

from polysynapse._version import __version__

# -- Project information -----------------------------------------------------

project = "polysynapse"
copyright = "2026, The Polysynapse Authors"
author = "The Polysynapse Authors"

# The full version, including alpha/beta/rc tags
release = __version__

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.napoleon",
    "myst_parser",
    "sphinx.ext.autodoc",
    "sphinx.ext.viewcode",
]
napoleon_google_docstring = True
napoleon_use_param = True
autodoc_typehints = "description"

# The suffix(es) of source filenames.
source_suffix = [".rst", ".md"]

exclude_patterns = []

# -- Options for HTML output -------------------------------------------------

html_theme = "bizstyle"

# -- Options for LaTeX output ---------------------------------------------
latex_elements = {"extraclassoptions": "openany,oneside"}
