"""TSPLIB EUC_2D instance/tour files and the toolkit JSON instance schema.

The JSON schema is::

    {"name": str, "n": int, "metric": "exact" | "tsplib" | "torus",
     "coords": [[x, y], ...],
     "provenance": {"family": str, "params": {...}, "seed": int} | null}
"""
from __future__ import annotations

import io
import json
import re
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .core import Instance, InvalidTourError, Metric, Tour, check_permutation


class TsplibParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class UnsupportedFormatError(TsplibParseError):
    pass


_KEYWORD = re.compile(r"^\s*([A-Z_]+)(?:\s*:\s*|\s+|$)(.*?)\s*$")
_SECTIONS = {"NODE_COORD_SECTION", "TOUR_SECTION", "EOF", "DISPLAY_DATA_SECTION", "EDGE_WEIGHT_SECTION"}


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _split_header(lines: list[str]) -> tuple[dict[str, str], str | None, int]:
    """Read ``KEY : value`` lines until a section keyword; return (header, section, index after it)."""
    header: dict[str, str] = {}
    for i, raw in enumerate(lines):
        line = raw.strip()
        if not line:
            continue
        m = _KEYWORD.match(line)
        if m is None:
            raise TsplibParseError(f"unexpected content {line!r}", i + 1)
        key, value = m.group(1), m.group(2)
        if key in _SECTIONS and not value:
            return header, key, i + 1
        header[key] = value or ""
    return header, None, len(lines)


def parse_instance(source, name: str | None = None) -> Instance:
    """Parse a TSPLIB ``EUC_2D`` file (text, bytes, path or stream).

    Node order follows the file; 1-based node ids become 0-based indices.
    """
    lines = _read_text(source).splitlines()
    header, section, start = _split_header(lines)
    ptype = header.get("TYPE", "TSP").split()[0] if header.get("TYPE") else "TSP"
    if ptype.upper() != "TSP":
        raise UnsupportedFormatError(f"unsupported TYPE {ptype!r}")
    ewt = header.get("EDGE_WEIGHT_TYPE")
    if ewt is None:
        raise TsplibParseError("missing EDGE_WEIGHT_TYPE")
    if ewt.upper() != "EUC_2D":
        raise UnsupportedFormatError(f"unsupported EDGE_WEIGHT_TYPE {ewt!r}")
    if "DIMENSION" not in header:
        raise TsplibParseError("missing DIMENSION")
    try:
        dim = int(header["DIMENSION"])
    except ValueError:
        raise TsplibParseError(f"bad DIMENSION {header['DIMENSION']!r}") from None
    if section != "NODE_COORD_SECTION":
        raise TsplibParseError("missing NODE_COORD_SECTION", len(lines))

    coords = np.empty((dim, 2), dtype=float)
    seen = np.zeros(dim, dtype=bool)
    count = 0
    for i in range(start, len(lines)):
        line = lines[i].strip()
        if not line:
            continue
        if line == "EOF" or line.endswith("_SECTION"):
            break
        parts = line.split()
        if len(parts) != 3:
            raise TsplibParseError(f"malformed coordinate line {line!r}", i + 1)
        try:
            idx = int(parts[0])
            x, y = float(parts[1]), float(parts[2])
        except ValueError:
            raise TsplibParseError(f"malformed coordinate line {line!r}", i + 1) from None
        if not 1 <= idx <= dim:
            raise TsplibParseError(f"node id {idx} outside 1..{dim}", i + 1)
        if seen[idx - 1]:
            raise TsplibParseError(f"node id {idx} repeated", i + 1)
        seen[idx - 1] = True
        coords[idx - 1] = (x, y)
        count += 1
    if count != dim:
        raise TsplibParseError(f"DIMENSION is {dim} but {count} coordinate lines were read", i + 1 if lines else None)
    return Instance(name or header.get("NAME") or "unnamed", coords, Metric.TSPLIB)


def _fmt(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_instance(instance: Instance, comment: str | None = None) -> str:
    """Serialize as a TSPLIB ``EUC_2D`` file; coordinates round-trip exactly."""
    out = io.StringIO()
    out.write(f"NAME : {instance.name or 'unnamed'}\n")
    if comment:
        out.write(f"COMMENT : {comment}\n")
    out.write("TYPE : TSP\n")
    out.write(f"DIMENSION : {instance.n}\n")
    out.write("EDGE_WEIGHT_TYPE : EUC_2D\n")
    out.write("NODE_COORD_SECTION\n")
    for i, (x, y) in enumerate(instance.coords, start=1):
        out.write(f"{i} {_fmt(x)} {_fmt(y)}\n")
    out.write("EOF\n")
    return out.getvalue()


def parse_tour(source, n: int) -> np.ndarray:
    """Read a tour as a 0-based permutation.

    Accepts a TSPLIB ``.tour`` file (``TOUR_SECTION`` ... ``-1``) or a bare
    whitespace-separated list of 1-based node ids, optionally ``-1``-terminated.
    """
    text = _read_text(source)
    lines = text.splitlines()
    body: Iterable[str]
    if any(l.strip().startswith("TOUR_SECTION") for l in lines):
        header, section, start = _split_header(lines)
        if "DIMENSION" in header and int(header["DIMENSION"]) != n:
            raise InvalidTourError(f"tour DIMENSION {header['DIMENSION']} does not match n={n}")
        body = lines[start:]
    else:
        body = lines
    ids: list[int] = []
    done = False
    for line in body:
        for tok in line.replace("−", "-").split():
            if tok == "EOF":
                done = True
                break
            try:
                v = int(tok)
            except ValueError:
                raise InvalidTourError(f"non-integer tour entry {tok!r}") from None
            if v == -1:
                done = True
                break
            ids.append(v)
        if done:
            break
    return check_permutation(np.asarray(ids, dtype=np.int64) - 1, n)


def write_tour(tour: Tour | Iterable[int], name: str = "tour", comment: str | None = None) -> str:
    order = tour.order if isinstance(tour, Tour) else np.asarray(list(tour))
    out = io.StringIO()
    out.write(f"NAME : {name}\n")
    if isinstance(tour, Tour):
        out.write(f"COMMENT : length {_fmt(tour.length)}\n")
    elif comment:
        out.write(f"COMMENT : {comment}\n")
    out.write("TYPE : TOUR\n")
    out.write(f"DIMENSION : {len(order)}\n")
    out.write("TOUR_SECTION\n")
    for v in order:
        out.write(f"{int(v) + 1}\n")
    out.write("-1\nEOF\n")
    return out.getvalue()


def instance_to_dict(instance: Instance) -> dict:
    return {
        "name": instance.name,
        "n": instance.n,
        "metric": instance.metric.value,
        "coords": instance.coords.tolist(),
        "provenance": instance.provenance,
    }


def instance_from_dict(d: dict) -> Instance:
    coords = np.asarray(d["coords"], dtype=float)
    if "n" in d and int(d["n"]) != coords.shape[0]:
        raise TsplibParseError(f"n is {d['n']} but {coords.shape[0]} coordinates given")
    return Instance(d.get("name") or "unnamed", coords, Metric.parse(d.get("metric", "exact")), d.get("provenance"))


def dump_json(instance: Instance) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(instance_to_dict(instance), sort_keys=True) + "\n"


def load_json(source) -> Instance:
    return instance_from_dict(json.loads(_read_text(source)))


def tour_to_json(tour: Tour, name: str = "tour") -> str:
    return json.dumps({"name": name, "n": tour.n, "length": tour.length, "order": tour.order.tolist()}, sort_keys=True) + "\n"


def read_instance_file(path: str | Path) -> Instance:
    """Load ``.json`` or TSPLIB ``.tsp`` by extension; the instance is named after the file stem."""
    path = Path(path)
    if path.suffix == ".json":
        return load_json(path)
    return parse_instance(path, name=None)


def read_tour_file(path: str | Path, n: int) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".json":
        d = json.loads(path.read_text(encoding="utf-8"))
        return check_permutation(d["order"], n)
    return parse_tour(path, n)


def write_instance_file(instance: Instance, path: str | Path) -> None:
    path = Path(path)
    text = dump_json(instance) if path.suffix == ".json" else write_instance(instance)
    path.write_text(text, encoding="utf-8")
