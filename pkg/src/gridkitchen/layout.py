"""ASCII layout DSL: parsing, validation, serialization, built-in registry.

A layout document is a block of grid lines followed, optionally, by a blank
line and ``key=value`` directives. Grid characters:

    W   wall (counter)
    A   agent spawn (floor)
    X   delivery station
    B   plate pile
    P   pot
    R   recipe indicator
    L   button recipe indicator
    0-9 ingredient pile
    (space) floor

Ragged lines are right-padded with spaces. The one supported directive is
``recipes=``, a semicolon-separated list of comma triples of ingredient
indices (e.g. ``recipes=0,0,1;0,1,1``). When absent, the recipe set defaults
to every multiset of size 3 over the ingredients present in the grid.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, List, Optional, Sequence, Tuple


class Cell(IntEnum):
    EMPTY = 0
    WALL = 1
    DELIVERY = 2
    POT = 3
    RECIPE_INDICATOR = 4
    BUTTON_RECIPE_INDICATOR = 5
    PLATE_PILE = 6
    INGREDIENT_PILE = 7  # pile of ingredient i is INGREDIENT_PILE + i


def ingredient_pile(index: int) -> int:
    return Cell.INGREDIENT_PILE + index


def pile_index(cell: int) -> Optional[int]:
    """Ingredient index if the cell is a pile, else None."""
    if cell >= Cell.INGREDIENT_PILE:
        return cell - Cell.INGREDIENT_PILE
    return None


_CHAR_TO_CELL = {
    " ": Cell.EMPTY,
    "W": Cell.WALL,
    "X": Cell.DELIVERY,
    "P": Cell.POT,
    "R": Cell.RECIPE_INDICATOR,
    "L": Cell.BUTTON_RECIPE_INDICATOR,
    "B": Cell.PLATE_PILE,
}
_CELL_TO_CHAR = {v: k for k, v in _CHAR_TO_CELL.items()}

RECIPE_SIZE = 3

Recipe = Tuple[int, ...]  # per-ingredient counts summing to RECIPE_SIZE


class LayoutError(ValueError):
    """Raised for documents that do not describe a usable layout."""


@dataclass(frozen=True)
class Layout:
    """Immutable parsed layout."""

    name: str
    width: int
    height: int
    cells: Tuple[Tuple[int, ...], ...]  # rows of Cell values, cells[y][x]
    agent_spawns: Tuple[Tuple[int, int], ...]  # (x, y), row-major scan order
    num_ingredients: int
    possible_recipes: Tuple[Recipe, ...]

    def cell(self, x: int, y: int) -> int:
        return self.cells[y][x]

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_floor(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and self.cells[y][x] == Cell.EMPTY

    @property
    def num_agents(self) -> int:
        return len(self.agent_spawns)

    def floor_cells(self) -> List[Tuple[int, int]]:
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if self.cells[y][x] == Cell.EMPTY
        ]

    def present_ingredients(self) -> List[int]:
        present = set()
        for row in self.cells:
            for c in row:
                idx = pile_index(c)
                if idx is not None:
                    present.add(idx)
        return sorted(present)

    def stations(self, kind: int) -> List[Tuple[int, int]]:
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if self.cells[y][x] == kind
        ]

    def structurally_equal(self, other: "Layout") -> bool:
        """Equality up to the name."""
        return (
            self.cells == other.cells
            and self.agent_spawns == other.agent_spawns
            and self.num_ingredients == other.num_ingredients
            and set(self.possible_recipes) == set(other.possible_recipes)
        )


def default_recipes(present: Sequence[int], num_ingredients: int) -> Tuple[Recipe, ...]:
    """All multisets of size 3 over the present ingredients, lexicographic."""
    recipes = []
    for combo in itertools.combinations_with_replacement(sorted(present), RECIPE_SIZE):
        counts = [0] * num_ingredients
        for idx in combo:
            counts[idx] += 1
        recipes.append(tuple(counts))
    return tuple(recipes)


def recipe_from_indices(indices: Sequence[int], num_ingredients: int) -> Recipe:
    """Canonical count vector from a triple of ingredient indices."""
    if len(indices) != RECIPE_SIZE:
        raise LayoutError(f"recipe {list(indices)} must list exactly {RECIPE_SIZE} ingredients")
    counts = [0] * num_ingredients
    for idx in indices:
        if not 0 <= idx < num_ingredients:
            raise LayoutError(f"recipe ingredient index {idx} out of range")
        counts[idx] += 1
    return tuple(counts)


def _parse_recipes_directive(value: str, num_ingredients: int) -> Tuple[Recipe, ...]:
    recipes: List[Recipe] = []
    for part in value.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            indices = [int(tok) for tok in part.split(",")]
        except ValueError:
            raise LayoutError(f"malformed recipe triple {part!r}") from None
        recipes.append(recipe_from_indices(indices, num_ingredients))
    if not recipes:
        raise LayoutError("recipes directive present but empty")
    if len(set(recipes)) != len(recipes):
        raise LayoutError("duplicate recipe in recipes directive")
    return tuple(recipes)


def parse_layout(
    text: str,
    name: str = "custom",
    possible_recipes: Optional[Sequence[Sequence[int]]] = None,
) -> Layout:
    """Parse a layout document.

    ``possible_recipes`` is the programmatic equivalent of the ``recipes=``
    directive, as triples of ingredient indices; supplying both is an error.
    """
    lines = text.split("\n")
    # Trim leading/trailing blank lines around the whole document.
    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()

    grid_lines: List[str] = []
    directives: Dict[str, str] = {}
    in_directives = False
    for line in lines:
        if not in_directives:
            if not line.strip():
                in_directives = True
                continue
            grid_lines.append(line)
        else:
            if not line.strip():
                continue
            if "=" not in line:
                raise LayoutError(f"malformed directive line {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key != "recipes":
                raise LayoutError(f"unknown directive {key!r}")
            if key in directives:
                raise LayoutError("duplicate recipes directive")
            directives[key] = value.strip()

    if not grid_lines:
        raise LayoutError("empty grid")

    width = max(len(line) for line in grid_lines)
    height = len(grid_lines)
    rows: List[Tuple[int, ...]] = []
    spawns: List[Tuple[int, int]] = []
    for y, line in enumerate(grid_lines):
        padded = line.ljust(width)
        row: List[int] = []
        for x, ch in enumerate(padded):
            if ch == "A":
                spawns.append((x, y))
                row.append(Cell.EMPTY)
            elif ch in _CHAR_TO_CELL:
                row.append(_CHAR_TO_CELL[ch])
            elif ch.isdigit():
                row.append(ingredient_pile(int(ch)))
            else:
                raise LayoutError(f"unknown character {ch!r} at row {y}, column {x}")
        rows.append(tuple(row))

    cells = tuple(rows)
    if not spawns:
        raise LayoutError("layout has no agents")

    present = set()
    for row in cells:
        for c in row:
            idx = pile_index(c)
            if idx is not None:
                present.add(idx)
    if not present:
        raise LayoutError("layout has no ingredient piles")
    num_ingredients = max(present) + 1

    for kind, label in (
        (Cell.DELIVERY, "delivery station"),
        (Cell.POT, "pot"),
        (Cell.PLATE_PILE, "plate pile"),
    ):
        if not any(c == kind for row in cells for c in row):
            raise LayoutError(f"layout has no {label}")

    if possible_recipes is not None and "recipes" in directives:
        raise LayoutError("recipes given both as directive and as argument")
    if "recipes" in directives:
        recipes = _parse_recipes_directive(directives["recipes"], num_ingredients)
    elif possible_recipes is not None:
        recipes = tuple(
            recipe_from_indices(triple, num_ingredients) for triple in possible_recipes
        )
        if len(set(recipes)) != len(recipes):
            raise LayoutError("duplicate recipe in possible_recipes")
    else:
        recipes = default_recipes(sorted(present), num_ingredients)

    for recipe in recipes:
        for idx, count in enumerate(recipe):
            if count > 0 and idx not in present:
                raise LayoutError(
                    f"recipe {recipe} uses ingredient {idx} with no pile in the layout"
                )

    return Layout(
        name=name,
        width=width,
        height=height,
        cells=cells,
        agent_spawns=tuple(spawns),
        num_ingredients=num_ingredients,
        possible_recipes=recipes,
    )


def serialize_layout(layout: Layout) -> str:
    """Emit a document that reparses to a structurally equal layout."""
    spawn_set = set(layout.agent_spawns)
    lines = []
    for y in range(layout.height):
        chars = []
        for x in range(layout.width):
            if (x, y) in spawn_set:
                chars.append("A")
                continue
            cell = layout.cells[y][x]
            idx = pile_index(cell)
            chars.append(str(idx) if idx is not None else _CELL_TO_CHAR[cell])
        lines.append("".join(chars))
    text = "\n".join(lines)

    defaults = default_recipes(layout.present_ingredients(), layout.num_ingredients)
    if set(layout.possible_recipes) != set(defaults):
        triples = []
        for recipe in layout.possible_recipes:
            indices = []
            for idx, count in enumerate(recipe):
                indices.extend([idx] * count)
            triples.append(",".join(str(i) for i in indices))
        text += "\n\nrecipes=" + ";".join(triples)
    return text + "\n"


def reachable_floor(layout: Layout, start: Tuple[int, int]) -> set:
    """Flood fill over floor cells, 4-connectivity."""
    if not layout.is_floor(*start):
        return set()
    seen = {start}
    frontier = [start]
    while frontier:
        x, y = frontier.pop()
        for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
            nxt = (x + dx, y + dy)
            if nxt not in seen and layout.is_floor(*nxt):
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def validate(layout: Layout) -> List[str]:
    """Reachability and consistency report; an empty list means valid.

    A station counts as reachable when at least one agent's region contains
    a floor cell orthogonally adjacent to it.
    """
    issues: List[str] = []

    regions = [reachable_floor(layout, spawn) for spawn in layout.agent_spawns]
    union = set().union(*regions) if regions else set()

    for x, y in layout.floor_cells():
        if x == 0 or y == 0 or x == layout.width - 1 or y == layout.height - 1:
            issues.append(f"floor cell ({x}, {y}) lies on the border")
        if (x, y) not in union:
            issues.append(f"floor cell ({x}, {y}) unreachable from any spawn")

    def reachable_station(x: int, y: int) -> bool:
        return any(
            (x + dx, y + dy) in union
            for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0))
        )

    def viewable_station(x: int, y: int) -> bool:
        # Indicators are watched rather than used: a Chebyshev-adjacent
        # reachable floor cell suffices (visible at any view radius >= 1).
        return any(
            (x + dx, y + dy) in union
            for dx in (-1, 0, 1)
            for dy in (-1, 0, 1)
            if (dx, dy) != (0, 0)
        )

    station_kinds = [
        (Cell.DELIVERY, "delivery station", reachable_station),
        (Cell.POT, "pot", reachable_station),
        (Cell.PLATE_PILE, "plate pile", reachable_station),
        (Cell.RECIPE_INDICATOR, "recipe indicator", viewable_station),
        (Cell.BUTTON_RECIPE_INDICATOR, "button recipe indicator", reachable_station),
    ]
    for idx in layout.present_ingredients():
        station_kinds.append(
            (ingredient_pile(idx), f"ingredient pile {idx}", reachable_station)
        )

    for kind, label, check in station_kinds:
        stations = layout.stations(kind)
        if not stations:
            continue
        if not any(check(x, y) for x, y in stations):
            issues.append(f"{label} unreachable by any agent")

    present = set(layout.present_ingredients())
    for recipe in layout.possible_recipes:
        for idx, count in enumerate(recipe):
            if count > 0 and idx not in present:
                issues.append(f"recipe {recipe} uses absent ingredient {idx}")

    return issues


# --- Built-in layouts -------------------------------------------------------
#
# The five classic kitchens use a single ingredient; the adapted set adds a
# second ingredient and a recipe indicator; the handcrafted set splits the
# kitchen into an observer room (sees the indicator) and a cook room, with
# the communication channel varying per family: a press-to-reveal button,
# delivery feedback only, or a shared pot for demonstrating ingredients.
# Geometries are this project's own fixtures.

_BUILTIN_SOURCES: Dict[str, str] = {
    "cramped_room": """
WWPWW
0  A0
WA  W
WBWXW
""",
    "asymm_advantages": """
WWWWWWWWW
0 WXW0W X
W   P A W
WA  P   W
WWWBWBWWW
""",
    "coord_ring": """
WWPPW
WA  W
B W W
0A  X
WW0WW
""",
    "forced_coord": """
WWWPW
0 WAP
0AW W
B W W
WWWXW
""",
    "counter_circuit": """
WWWPPWWW
WA     W
B WWWW X
W     AW
WWW00WWW
""",
    "cramped_room_v2": """
WWPWW
0A A1
W   W
WBRXW
""",
    "asymm_advantages_recipes_left": """
WWWWWWWWW
0 WXW1W X
R   P A W
WA  P   W
WWWBWBWWW
""",
    "asymm_advantages_recipes_center": """
WWWWWWWWW
0 WXR1W X
W   P A W
WA  P   W
WWWBWBWWW
""",
    "asymm_advantages_recipes_right": """
WWWWWWWWW
0 WXW1W X
W   P A R
WA  P   W
WWWBWBWWW
""",
    "two_rooms": """
WWWWWWW
W AWA 0
P  W  1
W  W  B
W  W  R
WWWWWXW
""",
    "grounded_coord_simple": """
WWWWWWW
RA W A0
0  W  1
1  W  P
W  L  B
WWWWWXW

recipes=0,0,0;1,1,1
""",
    "grounded_coord_ring": """
WWWWWWWWW
RA W A  0
0  W WW 1
1  W WW P
W  L    B
WWWWWWXWW

recipes=0,0,0;1,1,1
""",
    "test_time_simple": """
WWWWWWW
RA W A0
0  W  1
1  W  P
W  W  B
WWWWWXW

recipes=0,0,0;1,1,1
""",
    "test_time_wide": """
WWWWWWWWW
RA W A  0
0  W    1
1  W    P
W  W    B
WWWWWWXWW

recipes=0,0,0;1,1,1
""",
    "demo_cook_simple": """
WWWWWWW
RA WA 0
0  P  1
1  W  B
WWWWWXW

recipes=0,0,0;1,1,1
""",
    "demo_cook_wide": """
WWWWWWWWW
RA  WA  0
0   P   1
1   W   B
WWWWWWXWW

recipes=0,0,0;1,1,1
""",
}

_BUILTIN_CACHE: Dict[str, Layout] = {}


def builtin_names() -> List[str]:
    return list(_BUILTIN_SOURCES)


def builtin(name: str) -> Layout:
    if name not in _BUILTIN_SOURCES:
        known = ", ".join(sorted(_BUILTIN_SOURCES))
        raise LayoutError(f"unknown layout {name!r}; available: {known}")
    if name not in _BUILTIN_CACHE:
        _BUILTIN_CACHE[name] = parse_layout(_BUILTIN_SOURCES[name], name=name)
    return _BUILTIN_CACHE[name]
