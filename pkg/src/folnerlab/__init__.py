"""folnerlab: certified computations with Folner sets and invariant means.

Exact invariance certificates for finite subsets of discrete groups,
constructive "weakly but not strongly invariant" sets, Ornstein-Weiss style
quasi-tilings with an independent verifier, quota selection with certified
bounds, and an exact rectangle model of the ax+b group where the
non-unimodular obstruction is checked by pure arithmetic.
"""

__version__ = "0.1.0"
