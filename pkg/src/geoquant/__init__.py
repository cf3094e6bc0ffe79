"""Executable symplectic geometry and prequantization toolkit.

Subpackages by theme: expr (symbolic scalar fields), geometry (charts and
forms), hamilton (vector fields, brackets, flows), prequantum (line bundles
and Kostant-Souriau operators), polarization (foliations and holonomy),
densities (alpha-densities and atlas integration), simplicial/diffcoh
(discrete differential cocycles), cli (scene-driven command line).
"""

__version__ = "0.1.0"
