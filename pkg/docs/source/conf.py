#
# flotcol documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

# -- General configuration ------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.autosummary",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.viewcode",
    "IPython.sphinxext.ipython_console_highlighting",
    "matplotlib.sphinxext.plot_directive",
    "numpydoc",
    "sphinx_copybutton",
]

plot_html_show_source_link = False
plot_html_show_formats = False

autosummary_generate = False
numpydoc_show_class_members = False

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"

project = "flotcol"
copyright = "2026, flotcol developers"
author = "flotcol developers"

import flotcol

# The short X.Y version.
version = flotcol.__version__
# The full version, including alpha/beta/rc tags.
release = flotcol.__version__

exclude_patterns = []
pygments_style = "sphinx"
todo_include_todos = False


# -- Options for HTML output ----------------------------------------------

html_theme = "alabaster"
html_static_path = []
html_sidebars = {
    "**": [
        "relations.html",
        "searchbox.html",
    ]
}
htmlhelp_basename = "flotcol"


# -- Options for LaTeX output ---------------------------------------------

latex_documents = [
    (master_doc, "flotcol.tex", "flotcol Documentation", author, "manual"),
]

man_pages = [(master_doc, "flotcol", "flotcol Documentation", [author], 1)]

intersphinx_mapping = {
    "python": ("https://docs.python.org/3/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "pandas": ("https://pandas.pydata.org/pandas-docs/stable", None),
    "xarray": ("https://docs.xarray.dev/en/stable/", None),
    "matplotlib": ("https://matplotlib.org/stable", None),
}
