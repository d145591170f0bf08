"""Bit-packed item codes for ingredients, plates, and dishes.

A single integer describes any holdable/placeable item:

    bit 0           plated flag
    bit 1           cooked flag
    bits 2+2i,3+2i  count of ingredient i, 0..3

The same code is used uniformly for counter items, pot contents, and agent
inventories. The empty item is 0; a bare plate is 1.
"""
from __future__ import annotations

from typing import Sequence, Tuple

PLATED_BIT = 0x1
COOKED_BIT = 0x2

MAX_INGREDIENT_TYPES = 10  # pile glyphs are the ASCII digits 0-9
MAX_STACK = 3  # dishes are always exactly three units


class ItemError(ValueError):
    """Raised for item codes or component values that violate the encoding."""


def encode_item(plated: bool, cooked: bool, counts: Sequence[int]) -> int:
    """Pack flags and per-ingredient counts into an item code."""
    if len(counts) > MAX_INGREDIENT_TYPES:
        raise ItemError(f"at most {MAX_INGREDIENT_TYPES} ingredient types supported")
    total = 0
    code = (PLATED_BIT if plated else 0) | (COOKED_BIT if cooked else 0)
    for i, c in enumerate(counts):
        if not 0 <= c <= MAX_STACK:
            raise ItemError(f"ingredient {i} count {c} outside 0..{MAX_STACK}")
        total += c
        code |= c << (2 + 2 * i)
    if total > MAX_STACK:
        raise ItemError(f"total ingredient count {total} exceeds {MAX_STACK}")
    if cooked and total == 0:
        raise ItemError("cooked flag requires at least one ingredient")
    return code


def decode_item(code: int, num_ingredients: int) -> Tuple[bool, bool, Tuple[int, ...]]:
    """Unpack an item code; strict inverse of :func:`encode_item`."""
    if code < 0:
        raise ItemError(f"negative item code {code}")
    if code >> (2 + 2 * num_ingredients):
        raise ItemError(
            f"item code {code:#x} has bits beyond {num_ingredients} ingredients"
        )
    plated = bool(code & PLATED_BIT)
    cooked = bool(code & COOKED_BIT)
    counts = tuple((code >> (2 + 2 * i)) & 0x3 for i in range(num_ingredients))
    total = sum(counts)
    if total > MAX_STACK:
        raise ItemError(f"item code {code:#x} holds {total} units, max {MAX_STACK}")
    if cooked and total == 0:
        raise ItemError(f"item code {code:#x} is cooked but empty")
    return plated, cooked, counts


def is_valid_item(code: int, num_ingredients: int) -> bool:
    try:
        decode_item(code, num_ingredients)
    except ItemError:
        return False
    return True


def ingredient_unit(index: int) -> int:
    """Code for a single raw unit of one ingredient."""
    if not 0 <= index < MAX_INGREDIENT_TYPES:
        raise ItemError(f"ingredient index {index} outside 0..{MAX_INGREDIENT_TYPES - 1}")
    return 1 << (2 + 2 * index)


PLATE = PLATED_BIT  # bare plate: plated, no contents


def item_counts(code: int, num_ingredients: int) -> Tuple[int, ...]:
    return tuple((code >> (2 + 2 * i)) & 0x3 for i in range(num_ingredients))


def total_units(code: int, num_ingredients: int) -> int:
    return sum(item_counts(code, num_ingredients))


def is_plated(code: int) -> bool:
    return bool(code & PLATED_BIT)


def is_cooked(code: int) -> bool:
    return bool(code & COOKED_BIT)


def is_raw_ingredients(code: int) -> bool:
    """True for one or more raw units with no plate and no cooked flag."""
    return code != 0 and not (code & (PLATED_BIT | COOKED_BIT))


def merge_counts(a: int, b: int) -> int:
    """Sum the count fields of two codes; flags are OR-ed.

    Caller is responsible for checking the merged total stays within
    ``MAX_STACK``; counts are in disjoint bit lanes only while that holds.
    """
    return a + b


def all_valid_items(num_ingredients: int):
    """Every valid item code for a given ingredient arity, ascending."""
    top = 1 << (2 + 2 * num_ingredients)
    return [code for code in range(top) if is_valid_item(code, num_ingredients)]
