# -*- coding: utf-8 -*-
#
# icupolicy documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join('..', 'src')))

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.viewcode',
    'sphinx.ext.graphviz',
    'sphinxarg.ext',
]

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = u'icupolicy'
copyright = u'2024, icupolicy developers'

# The short X.Y version.
version = '0.3'
# The full version, including alpha/beta/rc tags.
release = '0.3.0'

exclude_patterns = ['_build']

default_role = "any"

pygments_style = 'sphinx'

# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'

html_static_path = ['_static']

htmlhelp_basename = 'icupolicydoc'

# -- Options for LaTeX output ---------------------------------------------

latex_elements = {
}

latex_documents = [
  ('index', 'icupolicy.tex', u'icupolicy Documentation',
   u'icupolicy developers', 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    ('index', 'icupolicy', u'icupolicy Documentation',
     [u'icupolicy developers'], 1)
]
