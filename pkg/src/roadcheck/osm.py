"""Street-map XML ingestion and drivable-corridor extraction.

The supported element subset is exactly ``node``, ``way``, ``nd`` and
``tag``; relations and any unknown elements or attributes are skipped and
never fatal. Parsed graphs are immutable and safe to share across threads.
"""

from __future__ import annotations

import math
import xml.parsers.expat
from dataclasses import dataclass, field
from xml.sax.saxutils import quoteattr

from .geodesy import GeoPose, LocalPoint, wgs84_to_local


class OsmParseError(ValueError):
    """Malformed map document: bad XML, or missing/invalid required attributes."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class DanglingRefError(ValueError):
    """A way references node ids that do not exist in the document."""

    def __init__(self, way_id: int, missing: list[int]):
        self.way_id = way_id
        self.missing = tuple(missing)
        super().__init__(f"way {way_id} references missing node(s) {list(missing)}")


@dataclass(frozen=True)
class Way:
    id: int
    node_refs: tuple[int, ...]
    tags: dict[str, str]


@dataclass(frozen=True)
class MapGraph:
    """Parsed street map: node coordinates plus ordered ways."""

    nodes: dict[int, tuple[float, float]]  # id -> (lat, lon)
    ways: tuple[Way, ...]


DEFAULT_HIGHWAY_WHITELIST = frozenset(
    {
        "motorway",
        "trunk",
        "primary",
        "secondary",
        "tertiary",
        "residential",
        "unclassified",
        "service",
        "living_street",
    }
)


def _default_class_widths() -> dict[str, float]:
    return {
        "motorway": 14.0,
        "primary": 9.0,
        "secondary": 8.0,
        "tertiary": 7.0,
        "residential": 5.5,
        "service": 4.0,
    }


@dataclass(frozen=True)
class WidthDefaults:
    """Fallback full road widths (meters) for ways without usable width tags."""

    by_class: dict[str, float] = field(default_factory=_default_class_widths)
    fallback: float = 5.0
    lane_width: float = 3.0

    def __post_init__(self) -> None:
        for cls, w in self.by_class.items():
            if not w > 0.0:
                raise ValueError(f"width default for {cls!r} must be > 0, got {w}")
        if not self.fallback > 0.0:
            raise ValueError(f"fallback width must be > 0, got {self.fallback}")
        if not self.lane_width > 0.0:
            raise ValueError(f"lane width must be > 0, got {self.lane_width}")


class _DocumentBuilder:
    """Expat handler collecting the supported element subset with line context."""

    def __init__(self, parser: xml.parsers.expat.XMLParserType):
        self.parser = parser
        self.nodes: dict[int, tuple[float, float]] = {}
        self.ways: list[Way] = []
        self._way_id: int | None = None
        self._way_refs: list[int] = []
        self._way_tags: dict[str, str] = {}
        self._way_line = 0

    def _fail(self, message: str) -> None:
        raise OsmParseError(message, line=self.parser.CurrentLineNumber)

    def _require(self, attrs: dict[str, str], key: str, element: str) -> str:
        value = attrs.get(key)
        if value is None:
            self._fail(f"<{element}> is missing required attribute {key!r}")
        return value

    def _parse_id(self, raw: str, element: str) -> int:
        try:
            return int(raw)
        except ValueError:
            self._fail(f"<{element}> id {raw!r} is not an integer")
        raise AssertionError("unreachable")

    def start(self, name: str, attrs: dict[str, str]) -> None:
        if name == "node":
            self._start_node(attrs)
        elif name == "way":
            if self._way_id is not None:
                self._fail("nested <way> elements are not allowed")
            self._way_id = self._parse_id(self._require(attrs, "id", "way"), "way")
            self._way_refs = []
            self._way_tags = {}
            self._way_line = self.parser.CurrentLineNumber
        elif name == "nd":
            if self._way_id is not None:
                raw = self._require(attrs, "ref", "nd")
                self._way_refs.append(self._parse_id(raw, "nd"))
        elif name == "tag":
            if self._way_id is not None:
                k = attrs.get("k")
                v = attrs.get("v")
                if k is not None and v is not None:
                    self._way_tags[k] = v
        # anything else (relation, bounds, ...) is skipped

    def _start_node(self, attrs: dict[str, str]) -> None:
        nid = self._parse_id(self._require(attrs, "id", "node"), "node")
        try:
            lat = float(self._require(attrs, "lat", "node"))
            lon = float(self._require(attrs, "lon", "node"))
        except ValueError:
            self._fail(f"node {nid} has non-numeric lat/lon")
        if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
            self._fail(f"node {nid} latitude {lat!r} outside [-90, 90]")
        if not (math.isfinite(lon) and -180.0 <= lon <= 180.0):
            self._fail(f"node {nid} longitude {lon!r} outside [-180, 180]")
        if nid in self.nodes:
            self._fail(f"duplicate node id {nid}")
        self.nodes[nid] = (lat, lon)

    def end(self, name: str) -> None:
        if name != "way" or self._way_id is None:
            return
        refs = self._way_refs
        if len(refs) < 2:
            raise OsmParseError(
                f"way {self._way_id} has {len(refs)} node ref(s); at least 2 required",
                line=self._way_line,
            )
        for a, b in zip(refs, refs[1:]):
            if a == b:
                raise OsmParseError(
                    f"way {self._way_id} repeats node ref {a} consecutively",
                    line=self._way_line,
                )
        self.ways.append(Way(id=self._way_id, node_refs=tuple(refs), tags=self._way_tags))
        self._way_id = None


def parse_osm_xml(document: bytes) -> MapGraph:
    """Parse map XML into a MapGraph, validating referential integrity.

    Raises OsmParseError with a line number for malformed documents and
    DanglingRefError when a way references a node absent from the document.
    """
    parser = xml.parsers.expat.ParserCreate()
    builder = _DocumentBuilder(parser)
    parser.StartElementHandler = builder.start
    parser.EndElementHandler = builder.end
    try:
        parser.Parse(document, True)
    except xml.parsers.expat.ExpatError as exc:
        raise OsmParseError(str(exc), line=getattr(exc, "lineno", None)) from exc
    for way in builder.ways:
        missing = [ref for ref in way.node_refs if ref not in builder.nodes]
        if missing:
            raise DanglingRefError(way.id, missing)
    return MapGraph(nodes=builder.nodes, ways=tuple(builder.ways))


def serialize_map_graph(graph: MapGraph) -> bytes:
    """Write the retained subset back out as map XML (parse round-trips)."""
    out = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6">']
    for nid, (lat, lon) in graph.nodes.items():
        out.append(f'  <node id="{nid}" lat="{lat!r}" lon="{lon!r}"/>')
    for way in graph.ways:
        out.append(f'  <way id="{way.id}">')
        for ref in way.node_refs:
            out.append(f'    <nd ref="{ref}"/>')
        for k, v in way.tags.items():
            out.append(f"    <tag k={quoteattr(k)} v={quoteattr(v)}/>")
        out.append("  </way>")
    out.append("</osm>")
    return ("\n".join(out) + "\n").encode("utf-8")


def filter_drivable(graph: MapGraph, whitelist: frozenset[str] | set[str]) -> list[Way]:
    """Ways whose ``highway`` tag is in the whitelist, in document order."""
    return [w for w in graph.ways if w.tags.get("highway") in whitelist]


def infer_width(way: Way, defaults: WidthDefaults) -> float:
    """Full drivable width in meters for a way.

    Precedence: explicit ``width`` tag (positive decimal meters), then
    ``lanes`` (positive integer) times the lane width, then the per-class
    default, then the fallback. Always > 0.
    """
    raw = way.tags.get("width")
    if raw is not None:
        try:
            w = float(raw)
        except ValueError:
            w = None
        if w is not None and math.isfinite(w) and w > 0.0:
            return w
    raw = way.tags.get("lanes")
    if raw is not None:
        try:
            n = int(raw)
        except ValueError:
            n = None
        if n is not None and n > 0:
            return n * defaults.lane_width
    cls = way.tags.get("highway")
    if cls in defaults.by_class:
        return defaults.by_class[cls]
    return defaults.fallback


@dataclass(frozen=True)
class Road:
    """A drivable corridor: centerline polyline with a constant full width."""

    way_id: int
    points: tuple[LocalPoint, ...]
    width: float
    highway_class: str

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise ValueError(f"road {self.way_id} needs >= 2 points")
        if not self.width > 0.0:
            raise ValueError(f"road {self.way_id} width must be > 0, got {self.width}")


@dataclass(frozen=True)
class RoadSet:
    roads: tuple[Road, ...]


def _distance_to_polyline(east: float, north: float, points: tuple[LocalPoint, ...]) -> float:
    """Min point-to-segment distance over every segment of the polyline."""
    best = math.inf
    for a, b in zip(points, points[1:]):
        ex, ey = b.east - a.east, b.north - a.north
        seg_len2 = ex * ex + ey * ey
        if seg_len2 == 0.0:
            t = 0.0
        else:
            t = ((east - a.east) * ex + (north - a.north) * ey) / seg_len2
            t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
        dx = east - (a.east + t * ex)
        dy = north - (a.north + t * ey)
        best = min(best, math.hypot(dx, dy))
    return best


def build_roadset(
    graph: MapGraph,
    whitelist: frozenset[str] | set[str],
    defaults: WidthDefaults,
    origin: GeoPose,
    radius: float,
) -> RoadSet:
    """Project drivable ways into the local frame and keep those near the origin.

    A way is kept when any point of its polyline (vertex or segment interior)
    lies within ``radius`` meters of the origin. Polylines keep their full
    extent; clipping happens at raster time.
    """
    projected: dict[int, LocalPoint] = {}

    def project(ref: int) -> LocalPoint:
        if ref not in projected:
            lat, lon = graph.nodes[ref]
            projected[ref] = wgs84_to_local(lat, lon, origin)
        return projected[ref]

    roads = []
    for way in filter_drivable(graph, whitelist):
        points = tuple(project(ref) for ref in way.node_refs)
        if _distance_to_polyline(0.0, 0.0, points) <= radius:
            roads.append(
                Road(
                    way_id=way.id,
                    points=points,
                    width=infer_width(way, defaults),
                    highway_class=way.tags.get("highway", ""),
                )
            )
    return RoadSet(roads=tuple(roads))
