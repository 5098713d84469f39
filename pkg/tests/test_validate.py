import numpy as np
import pytest
from helpers import brute_flood_regions

from roadcheck.bev import BevLabelGrid
from roadcheck.grids import BinaryGrid, GridSpec
from roadcheck.validate import (
    FN,
    FP,
    OCCLUDED,
    OUT_OF_FOV,
    TN,
    TP,
    UNOBSERVED,
    GridMismatchError,
    Palette,
    ValidationGrid,
    ValidationPolicy,
    classify,
    extract_regions,
    metrics,
    render_overlay,
)

LABELS = {0: "void", 1: "road", 2: "terrain", 4: "car", 5: "vegetation"}
SMALL_POLICY = ValidationPolicy(
    road_classes=frozenset({"road"}),
    occluder_classes=frozenset({"car", "vegetation"}),
    edge_band=0.0,
    min_region_cells=1,
)


def _spec(rows=6, cols=6, cell=1.0):
    return GridSpec.create(cell, 0.0, rows * cell, cols * cell / 2.0)


def _bev(spec, labels, observed=None):
    labels = np.asarray(labels, dtype=np.uint8)
    if observed is None:
        observed = np.ones(spec.shape, dtype=bool)
    return BevLabelGrid(spec=spec, labels=labels, observed=observed, label_map=dict(LABELS))


def _grid(spec, cells):
    return BinaryGrid(spec, np.asarray(cells, dtype=bool))


def test_classify_core_verdicts():
    spec = _spec(1, 4)
    labels = [[1, 1, 2, 2]]  # road, road, terrain, terrain
    map_road = _grid(spec, [[True, False, True, False]])
    fov = BinaryGrid.full(spec, True)
    grid = classify(_bev(spec, labels), map_road, fov, SMALL_POLICY)
    assert grid.verdicts.tolist() == [[TP, FP, FN, TN]]


def test_classify_occluder_dominates_map_state():
    spec = _spec(1, 4)
    labels = [[4, 4, 1, 2]]
    map_road = _grid(spec, [[True, False, True, True]])
    fov = BinaryGrid.full(spec, True)
    grid = classify(_bev(spec, labels), map_road, fov, SMALL_POLICY)
    assert grid.verdicts.tolist()[0][:2] == [OCCLUDED, OCCLUDED]
    # flipping the map under the occluded cells changes nothing
    flipped = _grid(spec, [[False, True, True, True]])
    again = classify(_bev(spec, labels), flipped, fov, SMALL_POLICY)
    assert np.array_equal(grid.verdicts[:, :2], again.verdicts[:, :2])


def test_classify_priority_out_of_fov_then_unobserved():
    spec = _spec(1, 3)
    labels = np.array([[1, 0, 1]], dtype=np.uint8)
    observed = np.array([[True, False, True]])
    fov = _grid(spec, [[False, True, True]])
    map_road = BinaryGrid.full(spec, True)
    grid = classify(_bev(spec, labels, observed), map_road, fov, SMALL_POLICY)
    assert grid.verdicts.tolist() == [[OUT_OF_FOV, UNOBSERVED, TP]]


def test_classify_edge_band_forgives_near_boundary():
    spec = _spec(1, 5, cell=1.0)
    # map road in the middle cell only; band of one cell width
    labels = [[1, 1, 1, 2, 2]]
    map_road = _grid(spec, [[False, False, True, False, False]])
    fov = BinaryGrid.full(spec, True)
    policy = ValidationPolicy(
        road_classes=frozenset({"road"}),
        occluder_classes=frozenset(),
        edge_band=1.0,
        min_region_cells=1,
    )
    grid = classify(_bev(spec, labels), map_road, fov, policy)
    # cell 1 claims road one cell away from the corridor: inside dilate band -> TN
    # cell 3 denies road next to the corridor: erode removes assertion -> TN
    assert grid.verdicts.tolist() == [[FP, TN, TP, TN, TN]]


def test_classify_requires_shared_spec():
    spec_a, spec_b = _spec(2, 4), _spec(4, 2)
    bev = _bev(spec_a, np.ones(spec_a.shape))
    with pytest.raises(GridMismatchError):
        classify(bev, BinaryGrid.full(spec_b, False), BinaryGrid.full(spec_a, True), SMALL_POLICY)


def test_self_validation_is_clean_at_zero_band():
    spec = _spec(8, 8)
    rng = np.random.default_rng(2)
    labels = rng.choice([1, 2], size=spec.shape).astype(np.uint8)
    bev = _bev(spec, labels)
    map_road = _grid(spec, labels == 1)
    fov = BinaryGrid.full(spec, True)
    grid = classify(bev, map_road, fov, SMALL_POLICY)
    assert grid.count(FP) == 0 and grid.count(FN) == 0


def test_verdicts_partition_every_cell():
    spec = _spec(10, 10)
    rng = np.random.default_rng(7)
    labels = rng.choice([0, 1, 2, 4], size=spec.shape).astype(np.uint8)
    observed = labels != 0
    bev = _bev(spec, labels, observed)
    map_road = _grid(spec, rng.random(spec.shape) < 0.4)
    fov = _grid(spec, rng.random(spec.shape) < 0.9)
    # unobserved==void invariant: labels already 0 where unobserved
    grid = classify(bev, map_road, fov, SMALL_POLICY)
    counts = grid.counts()
    assert sum(counts.values()) == spec.rows * spec.cols


def test_fp_fn_counts_monotone_in_edge_band():
    spec = _spec(12, 12, cell=0.5)
    rng = np.random.default_rng(11)
    labels = rng.choice([1, 2], size=spec.shape).astype(np.uint8)
    bev = _bev(spec, labels)
    map_road = _grid(spec, rng.random(spec.shape) < 0.5)
    fov = BinaryGrid.full(spec, True)
    prev_fp = prev_fn = None
    for band in (0.0, 0.25, 0.5, 1.0):
        policy = ValidationPolicy(
            road_classes=frozenset({"road"}),
            occluder_classes=frozenset(),
            edge_band=band,
            min_region_cells=1,
        )
        grid = classify(bev, map_road, fov, policy)
        fp, fn = grid.count(FP), grid.count(FN)
        if prev_fp is not None:
            assert fp <= prev_fp and fn <= prev_fn
        prev_fp, prev_fn = fp, fn


def test_policy_rejects_inconsistent_configuration():
    with pytest.raises(ValueError):
        ValidationPolicy(road_classes=frozenset({"road"}), occluder_classes=frozenset({"road"}))
    with pytest.raises(ValueError):
        ValidationPolicy(edge_band=-0.1)
    with pytest.raises(ValueError):
        ValidationPolicy(min_region_cells=0)


def _verdict_grid(spec, array):
    return ValidationGrid(spec=spec, verdicts=np.asarray(array, dtype=np.uint8))


def test_extract_regions_empty():
    spec = _spec(4, 4)
    grid = _verdict_grid(spec, np.full(spec.shape, TN))
    assert extract_regions(grid, FP, SMALL_POLICY) == []


def test_extract_regions_min_size_filter():
    spec = _spec(8, 8)
    verdicts = np.full(spec.shape, TN, dtype=np.uint8)
    verdicts[2:5, 2:5] = FP  # 3x3 block
    grid = _verdict_grid(spec, verdicts)
    policy = ValidationPolicy(
        road_classes=frozenset({"road"}), occluder_classes=frozenset(), min_region_cells=25
    )
    assert extract_regions(grid, FP, policy) == []
    small = ValidationPolicy(
        road_classes=frozenset({"road"}), occluder_classes=frozenset(), min_region_cells=9
    )
    regions = extract_regions(grid, FP, small)
    assert len(regions) == 1 and regions[0].cell_count == 9


def test_extract_regions_diagonal_blocks_stay_separate():
    spec = _spec(8, 8)
    verdicts = np.full(spec.shape, TN, dtype=np.uint8)
    verdicts[1:3, 1:3] = FP
    verdicts[3:5, 3:5] = FP  # touches only diagonally
    grid = _verdict_grid(spec, verdicts)
    regions = extract_regions(grid, FP, SMALL_POLICY)
    assert len(regions) == 2
    oracle = brute_flood_regions(verdicts == FP)
    assert {frozenset(r.cells) for r in regions} == {frozenset(c) for c in oracle}


def test_extract_regions_random_match_flood_oracle_and_order():
    spec = _spec(16, 16, cell=0.5)
    rng = np.random.default_rng(4)
    verdicts = np.where(rng.random(spec.shape) < 0.35, FP, TN).astype(np.uint8)
    grid = _verdict_grid(spec, verdicts)
    regions = extract_regions(grid, FP, SMALL_POLICY)
    oracle = brute_flood_regions(verdicts == FP)
    assert {frozenset(r.cells) for r in regions} == {frozenset(c) for c in oracle}
    sizes = [r.cell_count for r in regions]
    assert sizes == sorted(sizes, reverse=True)
    for a, b in zip(regions, regions[1:]):
        if a.cell_count == b.cell_count:
            assert a.cells[0] < b.cells[0]


def test_region_geometry_in_vehicle_meters():
    spec = _spec(4, 4)  # cell 1 m, forward 0..4, lateral +-2
    verdicts = np.full(spec.shape, TN, dtype=np.uint8)
    verdicts[0, 0] = FP  # single far-left-forward cell, center (3.5, 1.5)
    grid = _verdict_grid(spec, verdicts)
    region = extract_regions(grid, FP, SMALL_POLICY)[0]
    assert region.centroid_forward == 3.5 and region.centroid_left == 1.5
    assert (region.forward_min, region.forward_max) == (3.0, 4.0)
    assert (region.left_min, region.left_max) == (1.0, 2.0)


def test_metrics_all_tp():
    spec = _spec(2, 4)
    m = metrics(_verdict_grid(spec, np.full(spec.shape, TP)))
    assert m.road_iou_vs_map == 1.0 and m.fp_rate == 0.0 and m.fn_rate == 0.0
    assert not m.rate_denominator_empty


def test_metrics_hand_counted_grid():
    spec = _spec(2, 4)
    verdicts = [[TP, TP, TP, FP], [TN, TN, TN, TN]]
    m = metrics(_verdict_grid(spec, verdicts))
    assert m.fp_rate == 0.125
    assert m.road_iou_vs_map == 0.75
    assert m.counts == {
        "OUT_OF_FOV": 0, "TP": 3, "FP": 1, "FN": 0, "TN": 4, "OCCLUDED": 0, "UNOBSERVED": 0,
    }


def test_metrics_degenerate_all_out_of_fov():
    spec = _spec(2, 4)
    m = metrics(_verdict_grid(spec, np.full(spec.shape, OUT_OF_FOV)))
    assert m.fp_rate == 0.0 and m.fn_rate == 0.0 and m.road_iou_vs_map == 0.0
    assert m.rate_denominator_empty and m.iou_denominator_empty


def test_metrics_agree_with_unfiltered_regions():
    spec = _spec(12, 12, cell=0.5)
    rng = np.random.default_rng(21)
    verdicts = rng.choice([TP, FP, FN, TN], size=spec.shape).astype(np.uint8)
    grid = _verdict_grid(spec, verdicts)
    m = metrics(grid)
    for verdict, name in ((FP, "FP"), (FN, "FN")):
        regions = extract_regions(grid, verdict, SMALL_POLICY)  # min size 1
        assert sum(r.cell_count for r in regions) == m.counts[name]


def test_render_overlay_colors():
    spec = _spec(2, 4)
    labels = np.array([[1, 1, 2, 2], [1, 4, 2, 0]], dtype=np.uint8)
    observed = np.ones(spec.shape, dtype=bool)
    observed[1, 3] = False
    bev = _bev(spec, labels, observed)
    map_road = _grid(spec, [[True, False, False, False], [False, True, False, False]])
    verdicts = np.array([[TP, FP, FN, TN], [TP, OCCLUDED, TN, OUT_OF_FOV]], dtype=np.uint8)
    grid = _verdict_grid(spec, verdicts)
    palette = Palette()
    rgba = render_overlay(bev, map_road, grid, palette)
    assert rgba.shape == (2, 4, 4)
    assert tuple(rgba[0, 1]) == palette.fp
    assert tuple(rgba[0, 2]) == palette.fn
    assert tuple(rgba[1, 3]) == (0, 0, 0, 0)  # out of fov is transparent
    # plain TN terrain keeps its class color
    assert tuple(rgba[0, 3]) == (*palette.class_colors["terrain"], 255)
    # map road over TP road: channels scaled by 0.6 and rounded half-even
    road = palette.class_colors["road"]  # (128, 64, 128)
    assert tuple(rgba[0, 0]) == (77, 38, 77, 255)
    assert tuple(rgba[0, 0])[:3] == tuple(int(np.rint(0.6 * c)) for c in road)
    # occluded cell uses the hatch grays regardless of the map
    assert tuple(rgba[1, 1])[:3] in (palette.occluded_light, palette.occluded_dark)


def test_render_overlay_all_tn_empty_map_is_pure_class_colors():
    spec = _spec(2, 2)
    labels = np.array([[2, 2], [2, 2]], dtype=np.uint8)
    bev = _bev(spec, labels)
    rgba = render_overlay(
        bev,
        BinaryGrid.full(spec, False),
        _verdict_grid(spec, np.full(spec.shape, TN)),
        Palette(),
    )
    expected = (*Palette().class_colors["terrain"], 255)
    assert all(tuple(rgba[r, c]) == expected for r in range(2) for c in range(2))
