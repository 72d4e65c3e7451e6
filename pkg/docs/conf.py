# -*- coding: utf-8 -*-
#
# anxietysense documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.

import os
import sys

# The package lives under src/.
sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath('.')), 'src'))

import anxietysense

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.napoleon', 'sphinx.ext.viewcode']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'anxietysense'
copyright = 'The anxietysense project'

release = anxietysense.__version__
# The short X.Y version
version = '.'.join(release.split('.')[:2])

exclude_patterns = ['_build']
pygments_style = 'sphinx'

autodoc_member_order = 'bysource'


# -- Options for HTML output ---------------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_static_path = []
htmlhelp_basename = 'anxietysensedoc'


# -- Options for manual page output --------------------------------------------

man_pages = [
    ('index', 'anxietysense', 'anxietysense Documentation',
     ['The anxietysense developers'], 1)
]
