"""Periodic-table symbols and reduced-formula helpers."""

from __future__ import annotations

from collections import Counter
from functools import reduce
from math import gcd

SYMBOLS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
    "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm",
    "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds",
    "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)

ATOMIC_NUMBER = {sym: z for z, sym in enumerate(SYMBOLS, start=1)}


def is_element(symbol: str) -> bool:
    return symbol in ATOMIC_NUMBER


def atomic_number(symbol: str) -> int:
    return ATOMIC_NUMBER[symbol]


def sort_by_atomic_number(symbols) -> list[str]:
    return sorted(set(symbols), key=atomic_number)


def reduced_formula(species) -> str:
    """Reduced formula with elements in alphabetical order, e.g. ``MgMnO3``."""
    counts = Counter(species)
    if not counts:
        return ""
    div = reduce(gcd, counts.values())
    parts = []
    for sym in sorted(counts):
        n = counts[sym] // div
        parts.append(sym if n == 1 else f"{sym}{n}")
    return "".join(parts)
