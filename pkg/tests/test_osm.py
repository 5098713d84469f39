import pytest
from corpus_osm import CORPUS

from roadcheck.geodesy import GeoPose
from roadcheck.osm import (
    DEFAULT_HIGHWAY_WHITELIST,
    DanglingRefError,
    MapGraph,
    OsmParseError,
    Way,
    WidthDefaults,
    build_roadset,
    filter_drivable,
    infer_width,
    parse_osm_xml,
    serialize_map_graph,
)


@pytest.mark.parametrize("name,document,expectation", CORPUS, ids=[c[0] for c in CORPUS])
def test_parser_corpus(name, document, expectation):
    kind, payload = expectation
    if kind == "ok":
        payload(parse_osm_xml(document))
    elif kind == "parse_error":
        with pytest.raises(OsmParseError):
            parse_osm_xml(document)
    elif kind == "dangling":
        way_id, missing = payload
        with pytest.raises(DanglingRefError) as err:
            parse_osm_xml(document)
        assert err.value.way_id == way_id
        assert err.value.missing == missing
    else:
        raise AssertionError(f"unknown expectation {kind}")


def test_parse_errors_carry_line_context():
    doc = b'<?xml version="1.0"?>\n<osm>\n<node id="1" lon="7.0"/>\n</osm>'
    with pytest.raises(OsmParseError) as err:
        parse_osm_xml(doc)
    assert err.value.line == 3
    assert "line 3" in str(err.value)


def test_parse_serialize_parse_is_fixed_point():
    doc = (
        b'<osm generator="x"><node id="2" lat="49.00017" lon="7.5009" user="y"/>'
        b'<node id="1" lat="49.0" lon="7.5"/>'
        b'<relation id="3"><member ref="1"/></relation>'
        b'<way id="8" version="2"><nd ref="2"/><nd ref="1"/>'
        b'<tag k="highway" v="service"/><tag k="width" v="4.25"/></way></osm>'
    )
    first = parse_osm_xml(doc)
    second = parse_osm_xml(serialize_map_graph(first))
    assert first == second
    assert serialize_map_graph(first) == serialize_map_graph(second)


def _graph(ways, nodes=None):
    nodes = nodes or {1: (49.0, 8.4), 2: (49.0005, 8.4)}
    return MapGraph(nodes=nodes, ways=tuple(ways))


def test_filter_drivable_keeps_whitelisted_only():
    residential = Way(1, (1, 2), {"highway": "residential"})
    footway = Way(2, (1, 2), {"highway": "footway"})
    untagged = Way(3, (1, 2), {"name": "x"})
    graph = _graph([residential, footway, untagged])
    assert filter_drivable(graph, {"residential"}) == [residential]
    assert filter_drivable(graph, {"residential", "footway"}) == [residential, footway]
    assert filter_drivable(graph, {"primary"}) == []


def test_filter_drivable_distributes_over_union():
    ways = [
        Way(i, (1, 2), {"highway": cls})
        for i, cls in enumerate(["residential", "service", "footway", "primary"], start=1)
    ]
    graph = _graph(ways)
    a, b = {"residential", "footway"}, {"service", "footway", "tertiary"}
    union = {w.id for w in filter_drivable(graph, a | b)}
    split = {w.id for w in filter_drivable(graph, a)} | {
        w.id for w in filter_drivable(graph, b)
    }
    assert union == split


def test_infer_width_explicit_tag_wins():
    way = Way(1, (1, 2), {"highway": "residential", "width": "6.5", "lanes": "4"})
    assert infer_width(way, WidthDefaults()) == 6.5


def test_infer_width_class_default():
    way = Way(1, (1, 2), {"highway": "residential"})
    assert infer_width(way, WidthDefaults(by_class={"residential": 5.5})) == 5.5


def test_infer_width_lanes_times_lane_width():
    way = Way(1, (1, 2), {"highway": "primary", "lanes": "2"})
    assert infer_width(way, WidthDefaults(by_class={}, lane_width=3.0)) == 6.0


def test_infer_width_fallback_and_bad_values():
    defaults = WidthDefaults(by_class={}, fallback=5.0)
    assert infer_width(Way(1, (1, 2), {"highway": "trunk"}), defaults) == 5.0
    assert infer_width(Way(2, (1, 2), {"width": "narrow"}), defaults) == 5.0
    assert infer_width(Way(3, (1, 2), {"width": "-3"}), defaults) == 5.0
    assert infer_width(Way(4, (1, 2), {"lanes": "2.0"}), defaults) == 5.0
    assert infer_width(Way(5, (1, 2), {"lanes": "0"}), defaults) == 5.0


def test_infer_width_always_positive_on_garbage():
    defaults = WidthDefaults()
    for tags in [{}, {"width": "inf"}, {"width": "nan"}, {"lanes": "-2"}, {"width": ""}]:
        assert infer_width(Way(1, (1, 2), dict(tags)), defaults) > 0


def _square_graph():
    # one way through the origin, one ~500 m east of it
    nodes = {
        1: (48.9995, 8.4),
        2: (49.0005, 8.4),
        3: (48.9995, 8.4069),
        4: (49.0005, 8.4069),
    }
    ways = (
        Way(10, (1, 2), {"highway": "residential"}),
        Way(20, (3, 4), {"highway": "residential"}),
    )
    return MapGraph(nodes=nodes, ways=ways)


def test_build_roadset_empty_graph():
    origin = GeoPose(49.0, 8.4, 0.0)
    rs = build_roadset(
        MapGraph(nodes={}, ways=()), DEFAULT_HIGHWAY_WHITELIST, WidthDefaults(), origin, 100.0
    )
    assert rs.roads == ()


def test_build_roadset_keeps_near_and_drops_far():
    origin = GeoPose(49.0, 8.4, 0.0)
    rs = build_roadset(
        _square_graph(), DEFAULT_HIGHWAY_WHITELIST, WidthDefaults(), origin, 100.0
    )
    assert [r.way_id for r in rs.roads] == [10]
    assert rs.roads[0].width == 5.5
    assert rs.roads[0].highway_class == "residential"


def test_build_roadset_segment_crossing_counts_even_without_near_vertex():
    # way passes ~0 m from origin but both vertices are ~111 m away
    nodes = {1: (49.0, 8.3985), 2: (49.0, 8.4015)}
    graph = MapGraph(nodes=nodes, ways=(Way(10, (1, 2), {"highway": "residential"}),))
    origin = GeoPose(49.0, 8.4, 0.0)
    rs = build_roadset(graph, DEFAULT_HIGHWAY_WHITELIST, WidthDefaults(), origin, 50.0)
    assert len(rs.roads) == 1


def test_build_roadset_invariant_under_node_relabeling():
    origin = GeoPose(49.0, 8.4, 0.0)
    base = _square_graph()
    relabel = {1: 101, 2: 202, 3: 303, 4: 404}
    remapped = MapGraph(
        nodes={relabel[k]: v for k, v in base.nodes.items()},
        ways=tuple(
            Way(w.id, tuple(relabel[r] for r in w.node_refs), dict(w.tags))
            for w in base.ways
        ),
    )
    a = build_roadset(base, DEFAULT_HIGHWAY_WHITELIST, WidthDefaults(), origin, 100.0)
    b = build_roadset(remapped, DEFAULT_HIGHWAY_WHITELIST, WidthDefaults(), origin, 100.0)
    assert [(r.points, r.width, r.highway_class) for r in a.roads] == [
        (r.points, r.width, r.highway_class) for r in b.roads
    ]
