#!/usr/bin/env python
#
# cone_nn documentation build configuration file.
#
import os
import sys
sys.path.insert(0, os.path.abspath('..'))

import cone_nn

# -- General configuration ---------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.napoleon', 'sphinx.ext.viewcode']
napoleon_numpy_docstring = True

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'cone_nn'
copyright = "2023, cone_nn developers"
author = "cone_nn developers"

version = cone_nn.__version__
release = cone_nn.__version__

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'

# -- Options for HTML output -------------------------------------------

html_theme = 'alabaster'
html_static_path = ['_static']
htmlhelp_basename = 'cone_nndoc'

# -- Options for manual page output ------------------------------------

man_pages = [
    (master_doc, 'cone_nn', 'cone_nn Documentation', [author], 1)
]
