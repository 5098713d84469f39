"""Map-based validation of drivable-area segmentation masks."""

from .bev import (
    BevLabelGrid,
    CameraModel,
    LabelMask,
    ground_to_pixel,
    load_mask,
    occluder_mask,
    pixel_to_ground,
    warp_to_bev,
)
from .config import FrameMeta, RunConfig
from .geodesy import (
    GeoPose,
    LocalPoint,
    VehiclePoint,
    apply_corrections,
    local_to_vehicle,
    vehicle_to_local,
    wgs84_to_local,
)
from .grids import BinaryGrid, GridSpec, band_dilate, band_erode
from .osm import (
    MapGraph,
    RoadSet,
    Way,
    WidthDefaults,
    build_roadset,
    filter_drivable,
    infer_width,
    parse_osm_xml,
)
from .pipeline import run_batch, run_frame
from .raster import fov_footprint, rasterize_roads
from .synth import Perturbation, SyntheticScene, apply_perturbation, build_scene, render_mask
from .validate import (
    Palette,
    ValidationGrid,
    ValidationPolicy,
    classify,
    extract_regions,
    metrics,
    render_overlay,
)

__version__ = "0.1.0"
