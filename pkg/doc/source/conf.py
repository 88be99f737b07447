# SPDX-FileCopyrightText: 2024 pgse contributors
#
# SPDX-License-Identifier: MIT
"""Sphinx configuration of the pgse documentation."""
import os
import sys
sys.path.insert(0, os.path.abspath('../..'))

project = 'Property Graph Schema Evolution'
copyright = '2024, pgse contributors'
author = 'pgse contributors'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.napoleon',
]
templates_path = ['_templates']
exclude_patterns = []
default_role = 'any'

html_theme = 'alabaster'

autodoc_default_options = {
    'members': True,
    'show-inheritance': True,
}
autodoc_mock_imports = ['matplotlib']

intersphinx_mapping = {
    'python': ('https://docs.python.org/3/', None),
    'networkx': ('https://networkx.org/documentation/stable/', None),
}
