"""hilok: exact arithmetic for higher local fields of equal characteristic.

Layers, bottom up: gf (finite fields), tower (iterated Laurent series with
precision windows), witt (universal polynomials), forms (differential forms
and the Cartier operator), kmilnor (Milnor K mod p with the unit filtration),
hcoh (mod-p cohomology with the pole filtration), recip (residue reciprocity
pairing), ext (Artin-Schreier extensions and norms), cli (front end).
"""

__version__ = "0.1.0"
