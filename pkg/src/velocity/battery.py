"""
Reference vorticity fields and their plain-text geometry files.

A patch file holds one or more patches separated by blank lines. Each
patch starts with a header line ``strength odd_x1 odd_x2`` (flags 0/1)
followed by one ``x1 x2`` vertex per line in counterclockwise order.
Lines starting with ``#`` are comments.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from core.interfaces import ConfigurationError, DomainError
from core.schemas import E_INV4
from geometry.regions import omega_boundary_nodes
from velocity.field import Patch, SymmetryFlags, VorticityField

logger = logging.getLogger(__name__)

BATTERY_SUFFIX = ".txt"


def _parse_flag(token: str, source: str, lineno: int) -> bool:
    if token not in ("0", "1"):
        raise ConfigurationError(f"{source}:{lineno}: symmetry flag must be 0 or 1, got '{token}'")
    return token == "1"


def parse_patch_text(text: str, source: str = "<string>") -> VorticityField:
    """Parse patch-file content into a VorticityField."""
    blocks: List[List[tuple]] = [[]]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if blocks[-1]:
                blocks.append([])
            continue
        blocks[-1].append((lineno, line.split()))
    blocks = [b for b in blocks if b]
    if not blocks:
        raise ConfigurationError(f"{source}: no patches found")

    patches = []
    for block in blocks:
        lineno, header = block[0]
        if len(header) != 3:
            raise ConfigurationError(f"{source}:{lineno}: expected 'strength odd_x1 odd_x2'")
        try:
            strength = float(header[0])
        except ValueError:
            raise ConfigurationError(f"{source}:{lineno}: invalid strength '{header[0]}'")
        flags = SymmetryFlags(_parse_flag(header[1], source, lineno), _parse_flag(header[2], source, lineno))

        coords = []
        for vlineno, tokens in block[1:]:
            if len(tokens) != 2:
                raise ConfigurationError(f"{source}:{vlineno}: expected 'x1 x2'")
            try:
                coords.append((float(tokens[0]), float(tokens[1])))
            except ValueError:
                raise ConfigurationError(f"{source}:{vlineno}: invalid vertex '{' '.join(tokens)}'")
        try:
            patches.append(Patch(np.array(coords, dtype=float).reshape(-1, 2), strength, flags))
        except (DomainError, ValueError) as e:
            raise ConfigurationError(f"{source}:{lineno}: invalid patch: {e}")

    try:
        return VorticityField.build(patches)
    except DomainError as e:
        raise ConfigurationError(f"{source}: {e}")


def read_patch_file(path: Union[str, Path]) -> VorticityField:
    """Read a patch geometry file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigurationError(f"Failed to read patch file {path}: {e}")
    return parse_patch_text(text, str(path))


def format_patch_text(field: VorticityField) -> str:
    blocks = []
    for patch in field.patches:
        lines = [f"{patch.strength!r} {int(patch.symmetry.odd_x1)} {int(patch.symmetry.odd_x2)}"]
        lines.extend(f"{float(x)!r} {float(y)!r}" for x, y in patch.contour)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def write_patch_file(field: VorticityField, path: Union[str, Path]) -> Path:
    """Write a field in patch-file format; floats are written by repr so reading back is exact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_patch_text(field))
    return path


def _rect(x0: float, y0: float, x1: float, y1: float) -> np.ndarray:
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


def standard_battery() -> Dict[str, VorticityField]:
    """
    The five reference fields, all odd in both coordinates.

    Returns:
        Ordered mapping of field name to VorticityField
    """
    omega_nodes, _ = omega_boundary_nodes(E_INV4, 24)
    triangle = np.array([[0.2, 0.1], [0.8, 0.3], [0.3, 0.7]])
    l_shape = np.array([[0.1, 0.1], [0.6, 0.1], [0.6, 0.25], [0.25, 0.25], [0.25, 0.6], [0.1, 0.6]])

    return {
        "square": VorticityField.build([Patch(_rect(1.0, 1.0, 2.0, 2.0), 1.0)]),
        "omega_region": VorticityField.build([Patch(omega_nodes, 1.0)]),
        "triangle": VorticityField.build([Patch(triangle, 0.8)]),
        "l_shape": VorticityField.build([Patch(l_shape, 1.0)]),
        "two_patch": VorticityField.build([
            Patch(_rect(0.6, 0.6, 0.9, 0.9), -0.5),
            Patch(_rect(0.3, 0.02, 0.5, 0.12), 1.0),
        ]),
    }


def load_battery(directory: Optional[Union[str, Path]] = None) -> Dict[str, VorticityField]:
    """Fields from every patch file in directory (sorted by name), or the standard battery."""
    if directory is None:
        return standard_battery()
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigurationError(f"battery directory {directory} does not exist")
    files = sorted(directory.glob(f"*{BATTERY_SUFFIX}"))
    if not files:
        raise ConfigurationError(f"battery directory {directory} holds no patch files")
    battery = {f.stem: read_patch_file(f) for f in files}
    logger.info(f"Loaded {len(battery)} field(s) from {directory}")
    return battery
