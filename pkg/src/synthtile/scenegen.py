"""Scene construction: terrain, parcel layout, buildings, trees, pre-event variant.

Scene frame: x grows with image columns and y with image rows, origin at the
top-left corner of the tile, units in meters. The parcel grid has one cell
per output pixel; the terrain heightfield is coarser.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy import ndimage

from . import geometry
from .exceptions import LayoutInfeasible
from .noise import fbm
from .paramgen import ScenePlan
from .rng import SeededRng

TERRAIN_RESOLUTION = 64
SEA_LEVEL = 0.0
LAND_BASE = 1.0
FLAT_RELIEF = 0.4
HILL_RELIEF = 4.0
MOUNTAIN_RELIEF = 45.0
MAX_TREES = 5000
LOT_ATTEMPTS = 3


class TerrainClass(IntEnum):
    FLAT = 0
    HILL = 1
    MOUNTAIN = 2
    SEA = 3


class Zone(IntEnum):
    BARELAND = 0
    RANGELAND = 1
    DEVELOPED = 2
    ROAD = 3
    WATER = 4
    AGRICULTURE = 5
    FOREST = 6
    LOT = 7


@dataclass(frozen=True, eq=False)
class Heightfield:
    """Terrain elevations sampled at cell centres of a square grid."""

    elevation: np.ndarray
    cell_size: float
    terrain_class: np.ndarray
    origin: tuple[float, float] = (0.0, 0.0)

    @property
    def resolution(self):
        return self.elevation.shape[0]

    @property
    def extent(self):
        return self.cell_size * self.resolution

    def sample(self, x, y):
        """Bilinear elevation at scene points, clamped at the grid border."""
        n = self.resolution
        gx = np.clip((np.asarray(x, dtype=np.float64) - self.origin[0]) / self.cell_size - 0.5, 0, n - 1)
        gy = np.clip((np.asarray(y, dtype=np.float64) - self.origin[1]) / self.cell_size - 0.5, 0, n - 1)
        x0 = np.minimum(np.floor(gx).astype(np.intp), n - 2) if n > 1 else np.zeros_like(gx, dtype=np.intp)
        y0 = np.minimum(np.floor(gy).astype(np.intp), n - 2) if n > 1 else np.zeros_like(gy, dtype=np.intp)
        if n == 1:
            return np.full(np.broadcast(gx, gy).shape, float(self.elevation[0, 0]))
        fx = gx - x0
        fy = gy - y0
        e = self.elevation
        a = e[y0, x0] * (1 - fx) + e[y0, x0 + 1] * fx
        b = e[y0 + 1, x0] * (1 - fx) + e[y0 + 1, x0 + 1] * fx
        return a * (1 - fy) + b * fy

    def class_at(self, x, y):
        n = self.resolution
        ix = np.clip(((np.asarray(x) - self.origin[0]) / self.cell_size).astype(np.intp), 0, n - 1)
        iy = np.clip(((np.asarray(y) - self.origin[1]) / self.cell_size).astype(np.intp), 0, n - 1)
        return self.terrain_class[iy, ix]

    def fractions(self):
        counts = np.bincount(self.terrain_class.ravel(), minlength=len(TerrainClass))
        return {c.name.lower(): counts[c] / self.terrain_class.size for c in TerrainClass}


@dataclass(frozen=True, eq=False)
class ParcelMap:
    zones: np.ndarray  # (H, W) Zone codes, one cell per output pixel
    cell_size: float
    district_ids: np.ndarray  # (H, W) int, -1 outside districts
    lot_ids: np.ndarray  # (H, W) int, -1 outside lots
    lots: tuple  # per lot id: (x0, y0, x1, y1) in meters
    roads: tuple  # polylines, each (n, 2) array in meters
    rivers: tuple
    width: float

    @property
    def shape(self):
        return self.zones.shape

    @property
    def district_count(self):
        return int(self.district_ids.max()) + 1 if self.district_ids.size else 0

    def cell_centers(self):
        h, w = self.zones.shape
        xs = (np.arange(w) + 0.5) * self.cell_size
        ys = (np.arange(h) + 0.5) * self.cell_size
        return np.meshgrid(xs, ys)


@dataclass(frozen=True, eq=False)
class Building:
    id: int
    footprint: np.ndarray  # (n, 2) counter-clockwise, meters
    height: float  # to the eave
    roof: str = "flat"  # "flat" or "gable"
    roof_angle: float = 0.0  # degrees, gable only
    texture_id: int = 0
    # gable frame: centre, ridge direction (degrees), half span across the ridge
    frame: tuple = ()

    @property
    def ridge_height(self):
        if self.roof != "gable":
            return self.height
        return self.height + self.frame[3] * math.tan(math.radians(self.roof_angle))

    def surface_height(self, x, y):
        """Roof height above local ground at points inside the footprint."""
        if self.roof != "gable":
            return np.full(np.broadcast(x, y).shape, float(self.height))
        cx, cy, angle, half_span = self.frame
        t = math.radians(angle)
        # signed distance from the ridge line
        d = -(np.asarray(x) - cx) * math.sin(t) + (np.asarray(y) - cy) * math.cos(t)
        rise = np.clip(half_span - np.abs(d), 0.0, None) * math.tan(math.radians(self.roof_angle))
        return self.height + rise

    def __eq__(self, other):
        if not isinstance(other, Building):
            return NotImplemented
        return (self.id == other.id and np.array_equal(self.footprint, other.footprint)
                and self.height == other.height and self.roof == other.roof
                and self.roof_angle == other.roof_angle and self.texture_id == other.texture_id
                and self.frame == other.frame)

    __hash__ = None


@dataclass(frozen=True)
class Tree:
    x: float
    y: float
    trunk_height: float
    canopy_radius: float
    total_height: float

    def __post_init__(self):
        if not (self.total_height > self.trunk_height > 0 and self.canopy_radius > 0):
            raise ValueError("tree needs total_height > trunk_height > 0 and canopy_radius > 0")

    @property
    def canopy_half_height(self):
        return (self.total_height - self.trunk_height) / 2.0

    def surface_height(self, x, y):
        """Top of the canopy ellipsoid above local ground; NaN outside the crown."""
        r2 = ((np.asarray(x) - self.x) ** 2 + (np.asarray(y) - self.y) ** 2) / self.canopy_radius ** 2
        a = self.canopy_half_height
        with np.errstate(invalid="ignore"):
            h = self.trunk_height + a + a * np.sqrt(1.0 - r2)
        return np.where(r2 < 1.0, h, np.nan)


@dataclass(frozen=True, eq=False)
class Scene:
    terrain: Heightfield
    parcels: ParcelMap
    buildings: tuple
    trees: tuple
    plan: ScenePlan = None
    removed_ids: tuple = ()
    extent: float = field(default=None)

    def __post_init__(self):
        if self.extent is None:
            h, w = self.parcels.shape
            object.__setattr__(self, "extent", self.parcels.cell_size * w)


# ---------------------------------------------------------------- terrain

def generate_terrain(plan: ScenePlan, resolution: int = TERRAIN_RESOLUTION) -> Heightfield:
    """fBm terrain partitioned into sea / flat / hill / mountain by a selector field.

    Cells are assigned by rank of a low-frequency selector, so classified
    fractions match the plan up to one cell of rounding.
    """
    t = plan.terrain
    extent = plan.sensor.footprint
    cell = extent / resolution
    base_seed = SeededRng(plan.seed).child("terrain-noise").integer_seed()

    u = (np.arange(resolution) + 0.5) / resolution
    U, V = np.meshgrid(u, u)
    selector = fbm(U, V, seed=base_seed, octaves=3, scale=0.7)
    detail = fbm(U, V, seed=base_seed ^ 0x5A5A, octaves=6, scale=0.25)
    ridges = fbm(U, V, seed=base_seed ^ 0xA5A5, octaves=6, scale=0.35)

    n = resolution * resolution
    order = np.argsort(selector.ravel(), kind="stable")
    n_sea = int(round(t.sea_area * n))
    n_mtn = int(round(t.mountain_area * n))
    n_flat = min(int(round(t.flat_area * n)), n - n_sea - n_mtn)
    cls = np.full(n, TerrainClass.HILL, dtype=np.uint8)
    cls[order[:n_sea]] = TerrainClass.SEA
    cls[order[n_sea:n_sea + n_flat]] = TerrainClass.FLAT
    if n_mtn:
        cls[order[n - n_mtn:]] = TerrainClass.MOUNTAIN
    cls = cls.reshape(resolution, resolution)

    # selector rank in [0, 1] drives smooth relief growth from flat to mountain
    rank = np.empty(n)
    rank[order] = np.arange(n) / max(n - 1, 1)
    rank = rank.reshape(resolution, resolution)
    lo = (n_sea + n_flat) / n
    hi = (n - n_mtn) / n
    elev = LAND_BASE + FLAT_RELIEF * detail
    hill_w = np.clip((rank - lo) / max(hi - lo, 1e-9), 0, 1)
    elev = np.where(cls == TerrainClass.HILL, elev + HILL_RELIEF * hill_w * detail, elev)
    mtn_w = np.clip((rank - hi) / max(1 - hi, 1e-9), 0, 1)
    elev = np.where(cls == TerrainClass.MOUNTAIN,
                    elev + HILL_RELIEF * detail + MOUNTAIN_RELIEF * np.sqrt(mtn_w) * ridges, elev)
    elev = np.where(cls == TerrainClass.SEA, SEA_LEVEL, elev)
    return Heightfield(elevation=elev, cell_size=cell, terrain_class=cls)


def flat_terrain(extent: float, elevation: float = LAND_BASE, resolution: int = 8) -> Heightfield:
    return Heightfield(
        elevation=np.full((resolution, resolution), float(elevation)),
        cell_size=extent / resolution,
        terrain_class=np.zeros((resolution, resolution), dtype=np.uint8),
    )


# ---------------------------------------------------------------- layout

def _place_districts(plan, land, cell, rng):
    h, w = land.shape
    district_ids = np.full((h, w), -1, dtype=np.int32)
    frac = min(plan.grid.district_size * plan.style.district_scale / 100.0, 1.0)
    side = max(int(round(frac * w)), 1)
    min_side = max(4, w // 16)
    for k in range(plan.grid.district_num):
        s = side
        placed = False
        while not placed and s >= min_side:
            for _ in range(40):
                r0 = int(rng.integers(0, h - s + 1))
                c0 = int(rng.integers(0, w - s + 1))
                region = land[r0:r0 + s, c0:c0 + s] & (district_ids[r0:r0 + s, c0:c0 + s] < 0)
                if region.sum() < 0.5 * s * s:
                    continue
                lab, nlab = ndimage.label(region)
                sizes = np.bincount(lab.ravel())[1:]
                keep = lab == (int(np.argmax(sizes)) + 1)
                sub = district_ids[r0:r0 + s, c0:c0 + s]
                sub[keep] = k
                placed = True
                break
            s = int(s * 0.8)
        if not placed:
            raise LayoutInfeasible(f"no room for district {k} of {plan.grid.district_num}")
    return district_ids


def _subdivide_lots(plan, district_ids, cell, rng):
    zones_lot = np.zeros(district_ids.shape, dtype=bool)
    lot_ids = np.full(district_ids.shape, -1, dtype=np.int32)
    lots = []
    alley = 3.0
    lo, hi = plan.building_spec.lot_size_range
    for k in range(district_ids.max() + 1):
        rows, cols = np.nonzero(district_ids == k)
        if rows.size == 0:
            continue
        lot = float(rng.uniform(lo, hi))
        pitch = lot + alley
        x0 = cols.min() * cell
        y0 = rows.min() * cell
        xc = (cols + 0.5) * cell - x0
        yc = (rows + 0.5) * cell - y0
        in_lot = (np.mod(xc, pitch) < lot) & (np.mod(yc, pitch) < lot)
        ix = np.floor(xc / pitch).astype(np.int64)
        iy = np.floor(yc / pitch).astype(np.int64)
        keys = iy * 100000 + ix
        for key in np.unique(keys[in_lot]):
            sel = in_lot & (keys == key)
            j, i = divmod(int(key), 100000)
            lot_ids[rows[sel], cols[sel]] = len(lots)
            lots.append((x0 + i * pitch, y0 + j * pitch, x0 + i * pitch + lot, y0 + j * pitch + lot))
        zones_lot[rows[in_lot], cols[in_lot]] = True
    return zones_lot, lot_ids, tuple(lots)


def _road_polyline(extent, rng):
    side_a = int(rng.integers(4))
    side_b = (side_a + 1 + int(rng.integers(3))) % 4

    def edge_point(side):
        t = float(rng.uniform(0.1, 0.9)) * extent
        return [(t, 0.0), (extent, t), (t, extent), (0.0, t)][side]

    a = np.array(edge_point(side_a))
    b = np.array(edge_point(side_b))
    mid = (a + b) / 2 + rng.uniform(-0.1, 0.1, size=2) * extent
    return np.array([a, np.clip(mid, 0, extent), b])


def _river_polyline(terrain, rng):
    """Steepest-descent walk over terrain cell centres; elevations never increase."""
    e = terrain.elevation
    n = terrain.resolution
    cls = terrain.terrain_class
    land = np.argwhere(cls != TerrainClass.SEA)
    if len(land) == 0:
        land = np.argwhere(np.ones_like(cls, dtype=bool))
    # prefer high ground as a source
    heights = e[land[:, 0], land[:, 1]]
    top = land[heights >= np.quantile(heights, 0.7)]
    r, c = top[int(rng.integers(len(top)))]
    path = [(r, c)]
    offsets = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    while True:
        best = None
        for dr, dc in offsets:
            rr, cc = r + dr, c + dc
            if 0 <= rr < n and 0 <= cc < n and e[rr, cc] < e[r, c]:
                if best is None or e[rr, cc] < e[best]:
                    best = (rr, cc)
        if best is None or cls[r, c] == TerrainClass.SEA:
            break
        r, c = best
        path.append(best)
        if r in (0, n - 1) or c in (0, n - 1):
            break
    pts = (np.array(path, dtype=np.float64)[:, ::-1] + 0.5) * terrain.cell_size
    return pts


def generate_layout(plan: ScenePlan, terrain: Heightfield) -> ParcelMap:
    n = plan.sensor.image_size
    cell = plan.sensor.gsd
    rng = SeededRng(plan.seed).child("layout").generator()
    xs = (np.arange(n) + 0.5) * cell
    X, Y = np.meshgrid(xs, xs)
    tcls = terrain.class_at(X, Y)
    land = (tcls == TerrainClass.FLAT) | (tcls == TerrainClass.HILL)

    district_ids = _place_districts(plan, land, cell, rng)
    in_lot, lot_ids, lots = _subdivide_lots(plan, district_ids, cell, rng)

    cover_seed = SeededRng(plan.seed).child("landcover").integer_seed()
    q = fbm(X / plan.sensor.footprint, Y / plan.sensor.footprint, seed=cover_seed, octaves=4, scale=0.3)
    open_land = (district_ids < 0) & (tcls != TerrainClass.SEA)
    zones = np.full((n, n), Zone.RANGELAND, dtype=np.uint8)
    if open_land.any():
        forest_frac = min(0.8, 1.5 * plan.terrain.tree_density)
        qs = np.quantile(q[open_land], [forest_frac, forest_frac + 0.3 * (1 - forest_frac),
                                        forest_frac + 0.6 * (1 - forest_frac)])
        zones[open_land & (q >= qs[2])] = Zone.BARELAND
        zones[open_land & (q < qs[2])] = Zone.AGRICULTURE
        zones[open_land & (q < qs[1])] = Zone.RANGELAND
        zones[open_land & (q < qs[0])] = Zone.FOREST
        mtn = open_land & (tcls == TerrainClass.MOUNTAIN)
        zones[mtn & (zones == Zone.AGRICULTURE)] = Zone.RANGELAND
    zones[tcls == TerrainClass.SEA] = Zone.WATER
    zones[district_ids >= 0] = Zone.DEVELOPED
    zones[in_lot] = Zone.LOT

    rivers = tuple(_river_polyline(terrain, rng) for _ in range(plan.network.river_num))
    roads = tuple(_road_polyline(plan.sensor.footprint, rng) for _ in range(plan.network.road_num))
    half = plan.network.width / 2.0
    for line in rivers:
        zones[geometry.distance_to_polyline(X, Y, line) <= half] = Zone.WATER
    for line in roads:
        zones[(geometry.distance_to_polyline(X, Y, line) <= half) & (tcls != TerrainClass.SEA)] = Zone.ROAD
    lot_ids = np.where(zones == Zone.LOT, lot_ids, -1)

    return ParcelMap(zones=zones, cell_size=cell, district_ids=district_ids, lot_ids=lot_ids,
                     lots=lots, roads=roads, rivers=rivers, width=plan.network.width)


# ---------------------------------------------------------------- objects

def _building_in_lot(bid, lot, spec, rng, setback=1.5):
    x0, y0, x1, y1 = lot
    avail_w = (x1 - x0) - 2 * setback
    avail_h = (y1 - y0) - 2 * setback
    if min(avail_w, avail_h) < 4.0:
        return None
    btype = spec.types[int(rng.integers(len(spec.types)))] if rng.uniform() < 0.3 else spec.types[0]
    angle = float(rng.uniform(-15.0, 15.0))
    length = avail_w * float(rng.uniform(0.75, 1.0))
    width = avail_h * float(rng.uniform(0.75, 1.0))
    ew, eh = geometry.rotated_extent(length, width, angle)
    shrink = min(1.0, avail_w / ew, avail_h / eh)
    length, width = length * shrink, width * shrink
    ew, eh = geometry.rotated_extent(length, width, angle)
    cx = x0 + setback + ew / 2 + float(rng.uniform(0, max(avail_w - ew, 0.0)))
    cy = y0 + setback + eh / 2 + float(rng.uniform(0, max(avail_h - eh, 0.0)))
    height = float(rng.uniform(*spec.height_range))
    gable = rng.uniform() < spec.gable_fraction
    roof_angle = float(rng.uniform(*spec.roof_angle_range))
    texture_id = int(rng.integers(1 << 16))
    if btype == "l_shape":
        fp = geometry.l_shape(cx, cy, length, width, length * float(rng.uniform(0.3, 0.5)),
                              width * float(rng.uniform(0.3, 0.5)), angle)
        return Building(bid, fp, height, "flat", 0.0, texture_id)
    fp = geometry.rectangle(cx, cy, length, width, angle)
    if gable:
        # ridge runs along the longer side
        if length >= width:
            frame = (cx, cy, angle, width / 2.0)
        else:
            frame = (cx, cy, angle + 90.0, length / 2.0)
        return Building(bid, fp, height, "gable", roof_angle, texture_id, frame)
    return Building(bid, fp, height, "flat", 0.0, texture_id)


def populate_scene(plan: ScenePlan, terrain: Heightfield, parcels: ParcelMap) -> Scene:
    rng = SeededRng(plan.seed).child("populate").generator()
    cell = parcels.cell_size
    shape = parcels.shape
    buildings = []
    occupied = np.zeros(shape, dtype=bool)
    # lots clipped by roads, rivers or district edges shrink to their largest surviving block
    extents = ndimage.find_objects(parcels.lot_ids + 1, max_label=len(parcels.lots))
    for lot_id, lot in enumerate(parcels.lots):
        if rng.uniform() >= plan.grid.obj_density or extents[lot_id] is None:
            continue
        rs, cs = extents[lot_id]
        r0, c0, r1, c1 = geometry.largest_rectangle(parcels.lot_ids[rs, cs] == lot_id)
        lot = ((cs.start + c0) * cell, (rs.start + r0) * cell, (cs.start + c1) * cell, (rs.start + r1) * cell)
        for _ in range(LOT_ATTEMPTS):
            b = _building_in_lot(len(buildings), lot, plan.building_spec, rng)
            if b is None:
                break
            mask = geometry.rasterize_polygon(b.footprint, cell, shape)
            if mask.any() and (parcels.lot_ids[mask] == lot_id).all():
                buildings.append(b)
                occupied |= mask
                break
            # shrink toward the lot centre and retry
            cx, cy = (lot[0] + lot[2]) / 2, (lot[1] + lot[3]) / 2
            hw, hh = 0.4 * (lot[2] - lot[0]), 0.4 * (lot[3] - lot[1])
            lot = (cx - hw, cy - hh, cx + hw, cy + hh)

    trees = _place_trees(plan, parcels, occupied, rng)
    return Scene(terrain=terrain, parcels=parcels, buildings=tuple(buildings), trees=tuple(trees), plan=plan)


TREE_ZONE_WEIGHTS = {Zone.FOREST: 4.0, Zone.RANGELAND: 1.0, Zone.DEVELOPED: 0.5, Zone.LOT: 0.5}


def _place_trees(plan, parcels, occupied, rng):
    spec = plan.tree_spec
    weights = np.zeros(parcels.shape)
    for z, wgt in TREE_ZONE_WEIGHTS.items():
        weights[parcels.zones == z] = wgt
    weights[occupied] = 0.0
    eligible = weights > 0
    if not eligible.any() or plan.terrain.tree_density <= 0:
        return []
    cell = parcels.cell_size
    r_lo, r_hi = spec.crown_radius_range
    mean_crown = math.pi * (r_lo * r_lo + r_lo * r_hi + r_hi * r_hi) / 3.0
    area = eligible.sum() * cell * cell
    count = min(int(round(plan.terrain.tree_density * area / mean_crown)), MAX_TREES)
    if count == 0:
        return []
    flat = np.flatnonzero(eligible)
    p = weights.ravel()[flat]
    picks = rng.choice(flat, size=count, p=p / p.sum())
    rows, cols = np.divmod(picks, parcels.shape[1])
    jitter = rng.uniform(0, 1, size=(count, 2))
    radius = rng.uniform(r_lo, r_hi, size=count)
    # branch/leaf counts only modulate crown jitter
    radius *= 1.0 + 0.01 * (spec.branch_num - 5) + rng.normal(0, 0.0005 * spec.leaf_num, size=count)
    radius = np.clip(radius, 0.5 * r_lo, 1.5 * r_hi)
    trunk = rng.uniform(*spec.trunk_height_range, size=count)
    crown_h = radius * rng.uniform(1.2, 2.2, size=count)
    trees = []
    for k in range(count):
        trees.append(Tree(float((cols[k] + jitter[k, 0]) * cell), float((rows[k] + jitter[k, 1]) * cell),
                          float(trunk[k]), float(radius[k]), float(trunk[k] + crown_h[k])))
    return trees


def scripted_scene(buildings=(), trees=(), extent=64.0, cell_size=1.0, elevation=LAND_BASE,
                   zone=Zone.DEVELOPED) -> Scene:
    """Hand-built scene on flat terrain with a uniform ground zone, for tests and oracles."""
    n = int(round(extent / cell_size))
    if n <= 0 or not math.isclose(n * cell_size, extent):
        raise ValueError("extent must be a positive multiple of cell_size")
    parcels = ParcelMap(
        zones=np.full((n, n), int(zone), dtype=np.uint8),
        cell_size=float(cell_size),
        district_ids=np.full((n, n), -1, dtype=np.int32),
        lot_ids=np.full((n, n), -1, dtype=np.int32),
        lots=(), roads=(), rivers=(), width=0.0,
    )
    return Scene(terrain=flat_terrain(extent, elevation), parcels=parcels,
                 buildings=tuple(buildings), trees=tuple(trees))


def generate_scene(plan: ScenePlan) -> Scene:
    terrain = generate_terrain(plan)
    parcels = generate_layout(plan, terrain)
    return populate_scene(plan, terrain, parcels)


# ---------------------------------------------------------------- pre-event

def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def remove_buildings(scene: Scene, ids) -> Scene:
    ids = set(int(i) for i in ids)
    kept = tuple(b for b in scene.buildings if b.id not in ids)
    removed = tuple(b.id for b in scene.buildings if b.id in ids)
    return dataclasses.replace(scene, buildings=kept, removed_ids=scene.removed_ids + removed)


def derive_pre_event(scene: Scene, removal_fraction: float, seed: int) -> Scene:
    """Remove a uniformly sampled ``removal_fraction`` of buildings; terrain, parcels and trees are shared."""
    if not 0.0 <= removal_fraction <= 1.0:
        raise ValueError("removal_fraction must lie in [0, 1]")
    n = len(scene.buildings)
    n_keep = round_half_up((1.0 - removal_fraction) * n)
    rng = SeededRng(seed).child("removal-pick").generator()
    keep_idx = set(rng.choice(n, size=n_keep, replace=False).tolist()) if n else set()
    removed = [b.id for i, b in enumerate(scene.buildings) if i not in keep_idx]
    return remove_buildings(scene, removed)


# ---------------------------------------------------------------- debug export

def dump_geometry(scene: Scene) -> str:
    """Plain-text geometry dump, one record per object."""
    lines = []
    for b in scene.buildings:
        verts = ";".join(f"{x:.6f},{y:.6f}" for x, y in b.footprint)
        lines.append(f"building\t{b.id}\t{b.roof}\t{b.height:.6f}\t{b.ridge_height:.6f}\t{verts}")
    for t in scene.trees:
        lines.append(f"tree\t{t.x:.6f},{t.y:.6f}\t{t.trunk_height:.6f}\t{t.canopy_radius:.6f}\t{t.total_height:.6f}")
    for kind, lines_ in (("road", scene.parcels.roads), ("river", scene.parcels.rivers)):
        for line in lines_:
            verts = ";".join(f"{x:.6f},{y:.6f}" for x, y in line)
            lines.append(f"{kind}\t{scene.parcels.width:.6f}\t{verts}")
    return "\n".join(lines) + "\n"
