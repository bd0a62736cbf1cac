"""Orthographic rendering of a scene into aligned RGB / label / nDSM / building rasters.

Objects are modelled as height profiles above the local terrain (extruded
footprints with flat or gable roofs, ellipsoidal tree crowns), so the
surface is a 2.5D heightfield. Nadir views sample that heightfield exactly at
pixel centres; oblique views march each pixel's ray through a 2x supersampled
copy and take the first sample at or below the surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from ._validation import check_same_shape
from .noise import fbm
from .paramgen import SensorParams, SunParams
from .rng import SeededRng
from .scenegen import Scene, Zone

CLASS_NAMES = (
    "Bareland", "Rangeland", "Developed Space", "Road", "Tree", "Water", "Agriculture", "Building",
)
BARELAND, RANGELAND, DEVELOPED, ROAD, TREE, WATER, AGRICULTURE, BUILDING = range(8)
HEIGHT_CLASSES = (TREE, BUILDING)
GROUND_CLASSES = tuple(c for c in range(8) if c not in HEIGHT_CLASSES)

# Display colours for the label palette.
CLASS_COLORS = np.array([
    [128, 0, 0], [0, 255, 36], [148, 148, 148], [255, 255, 255],
    [34, 97, 38], [0, 69, 255], [75, 181, 73], [222, 31, 7],
], dtype=np.uint8)

ZONE_TO_CLASS = np.zeros(len(Zone), dtype=np.uint8)
ZONE_TO_CLASS[Zone.BARELAND] = BARELAND
ZONE_TO_CLASS[Zone.RANGELAND] = RANGELAND
ZONE_TO_CLASS[Zone.DEVELOPED] = DEVELOPED
ZONE_TO_CLASS[Zone.ROAD] = ROAD
ZONE_TO_CLASS[Zone.WATER] = WATER
ZONE_TO_CLASS[Zone.AGRICULTURE] = AGRICULTURE
ZONE_TO_CLASS[Zone.FOREST] = RANGELAND
ZONE_TO_CLASS[Zone.LOT] = DEVELOPED

# Base material colours (RGB in [0, 1]) per style palette.
_BASE_MATERIALS = np.array([
    [0.62, 0.53, 0.42],  # bareland
    [0.45, 0.55, 0.30],  # rangeland
    [0.60, 0.60, 0.58],  # developed
    [0.33, 0.33, 0.35],  # road
    [0.16, 0.36, 0.15],  # tree
    [0.10, 0.22, 0.35],  # water
    [0.55, 0.60, 0.28],  # agriculture
    [0.70, 0.45, 0.38],  # building roof
])
_PALETTE_TINTS = np.array([
    [1.00, 1.00, 1.00], [1.05, 0.98, 0.90], [0.95, 1.00, 1.05],
    [1.00, 0.95, 0.95], [0.92, 0.96, 1.06], [1.04, 1.02, 0.96],
])


@dataclass(frozen=True)
class Camera:
    """Orthographic camera; pixel (r, c) looks at ground point ((c+0.5)g, (r+0.5)g) on z = 0."""

    azimuth: float
    look_angle: float
    gsd: float
    image_size: int
    origin: tuple[float, float] = (0.0, 0.0)

    @property
    def footprint(self):
        return self.gsd * self.image_size

    @property
    def is_nadir(self):
        return self.look_angle == 0.0

    @property
    def toward_sensor(self):
        """Horizontal offset of the ray per meter of height (x east, y south)."""
        if self.is_nadir:
            return (0.0, 0.0)
        t = math.tan(math.radians(self.look_angle))
        a = math.radians(self.azimuth)
        return (t * math.sin(a), -t * math.cos(a))

    @property
    def ray_direction(self):
        if self.is_nadir:
            return np.array([0.0, 0.0, -1.0])
        L = math.radians(self.look_angle)
        a = math.radians(self.azimuth)
        return np.array([-math.sin(L) * math.sin(a), math.sin(L) * math.cos(a), -math.cos(L)])

    def pixel_to_ground(self, row, col, z=0.0):
        """Scene point where pixel (row, col)'s ray crosses height ``z``."""
        ox, oy = self.toward_sensor
        x = self.origin[0] + (np.asarray(col, dtype=np.float64) + 0.5) * self.gsd + z * ox
        y = self.origin[1] + (np.asarray(row, dtype=np.float64) + 0.5) * self.gsd + z * oy
        return x, y

    def ground_to_pixel(self, x, y, z=0.0):
        ox, oy = self.toward_sensor
        col = (np.asarray(x, dtype=np.float64) - z * ox - self.origin[0]) / self.gsd - 0.5
        row = (np.asarray(y, dtype=np.float64) - z * oy - self.origin[1]) / self.gsd - 0.5
        return row, col


def build_camera(sensor: SensorParams) -> Camera:
    return Camera(azimuth=float(sensor.azimuth), look_angle=float(sensor.look_angle),
                  gsd=float(sensor.gsd), image_size=int(sensor.image_size))


@dataclass(frozen=True, eq=False)
class RasterStack:
    rgb: np.ndarray  # (H, W, 3) uint8
    label: np.ndarray  # (H, W) uint8 class ids
    ndsm: np.ndarray  # (H, W) float32 meters
    building_mask: np.ndarray  # (H, W) uint8 0/1
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.label.shape


@dataclass(frozen=True, eq=False)
class TexturedScene:
    scene: Scene
    texture_seed: int
    materials: np.ndarray  # (8, 3) base colours
    roof_colors: dict  # building id -> (3,) colour


def apply_textures(scene: Scene, texture_seed: int) -> TexturedScene:
    """Seeded procedural materials: jittered per-class base colours and per-roof colours."""
    rng = SeededRng(texture_seed).child("materials").generator()
    palette = scene.plan.style.palette_id if scene.plan is not None else 0
    base = _BASE_MATERIALS * _PALETTE_TINTS[palette % len(_PALETTE_TINTS)]
    materials = np.clip(base * rng.uniform(0.85, 1.15, size=base.shape), 0.0, 1.0)
    roof_rng = SeededRng(texture_seed).child("roofs").generator()
    roof_base = roof_rng.uniform(0.25, 0.85, size=(max((b.id for b in scene.buildings), default=-1) + 1, 3))
    roof_colors = {}
    for b in scene.buildings:
        tint = SeededRng(texture_seed).child(int(b.texture_id)).generator().uniform(0.8, 1.2, size=3)
        roof_colors[b.id] = np.clip(0.5 * roof_base[b.id] * tint + 0.5 * materials[BUILDING], 0.0, 1.0)
    return TexturedScene(scene, int(texture_seed), materials, roof_colors)


# ---------------------------------------------------------------- surface model

@dataclass
class _Surface:
    spacing: float
    terrain: np.ndarray
    obj_height: np.ndarray
    obj_class: np.ndarray  # 0 = none, else TREE / BUILDING
    obj_id: np.ndarray
    ground_class: np.ndarray


def _evaluate_surface(scene: Scene, spacing: float, n: int) -> _Surface:
    coords = (np.arange(n) + 0.5) * spacing
    X, Y = np.meshgrid(coords, coords)
    terrain = scene.terrain.sample(X, Y)
    parcels = scene.parcels
    zr = np.clip((coords / parcels.cell_size).astype(np.intp), 0, parcels.shape[0] - 1)
    zc = np.clip((coords / parcels.cell_size).astype(np.intp), 0, parcels.shape[1] - 1)
    ground = ZONE_TO_CLASS[parcels.zones[np.ix_(zr, zc)]]

    obj_h = np.zeros((n, n))
    obj_cls = np.zeros((n, n), dtype=np.uint8)
    obj_id = np.full((n, n), -1, dtype=np.int64)

    for b in scene.buildings:
        rs, cs = geometry.polygon_window(b.footprint, spacing, (n, n))
        if rs.stop <= rs.start or cs.stop <= cs.start:
            continue
        xs, ys = X[rs, cs], Y[rs, cs]
        inside = geometry.points_in_polygon(xs, ys, b.footprint)
        h = b.surface_height(xs, ys)
        cur_h, cur_c = obj_h[rs, cs], obj_cls[rs, cs]
        # higher surface wins; on a tie buildings beat trees
        win = inside & ((h > cur_h) | ((h == cur_h) & (cur_c != BUILDING)))
        cur_h[win] = h[win]
        cur_c[win] = BUILDING
        obj_id[rs, cs][win] = b.id

    for k, t in enumerate(scene.trees):
        r = t.canopy_radius
        c0 = max(int(math.floor((t.x - r) / spacing - 0.5)), 0)
        c1 = min(int(math.ceil((t.x + r) / spacing - 0.5)) + 1, n)
        r0 = max(int(math.floor((t.y - r) / spacing - 0.5)), 0)
        r1 = min(int(math.ceil((t.y + r) / spacing - 0.5)) + 1, n)
        if r1 <= r0 or c1 <= c0:
            continue
        rs, cs = slice(r0, r1), slice(c0, c1)
        h = t.surface_height(X[rs, cs], Y[rs, cs])
        cur_h, cur_c = obj_h[rs, cs], obj_cls[rs, cs]
        win = np.nan_to_num(h, nan=-1.0) > cur_h
        cur_h[win] = h[win]
        cur_c[win] = TREE
        obj_id[rs, cs][win] = k

    return _Surface(spacing, terrain, obj_h, obj_cls, obj_id, ground)


def _march(surface: _Surface, camera: Camera):
    """Per output pixel, index into the surface grid of the first hit and its height."""
    n_out = camera.image_size
    m = surface.terrain.shape[0]
    dsm = (surface.terrain + surface.obj_height).ravel()
    ox, oy = camera.toward_sensor
    tan_l = math.hypot(ox, oy)
    s = surface.spacing
    rows, cols = np.meshgrid(np.arange(n_out), np.arange(n_out), indexing="ij")
    gx = ((cols + 0.5) * camera.gsd).ravel()
    gy = ((rows + 0.5) * camera.gsd).ravel()
    z_top = float(dsm.max()) + 1e-6
    z_bot = float(surface.terrain.min())
    dz = s / tan_l
    n_steps = int(math.ceil((z_top - z_bot) / dz)) + 1

    hit_idx = np.zeros(gx.size, dtype=np.int64)
    hit_z = np.zeros(gx.size)
    active = np.arange(gx.size)
    z_prev = np.full(gx.size, z_top)
    for k in range(1, n_steps + 1):
        z = max(z_top - k * dz, z_bot)
        ci = np.clip(np.floor((gx[active] + z * ox) / s).astype(np.int64), 0, m - 1)
        ri = np.clip(np.floor((gy[active] + z * oy) / s).astype(np.int64), 0, m - 1)
        idx = ri * m + ci
        surf = dsm[idx]
        hit = surf >= z
        if k == n_steps:
            hit[:] = True
        h_act = active[hit]
        hit_idx[h_act] = idx[hit]
        # landing on a top surface keeps its height; hitting a wall keeps the ray height
        hit_z[h_act] = np.minimum(surf[hit], z_prev[h_act])
        active = active[~hit]
        z_prev[active] = z
        if active.size == 0:
            break
    return hit_idx.reshape(n_out, n_out), hit_z.reshape(n_out, n_out)


def _shade(textured: TexturedScene, surface: _Surface, idx, hit_xy, label, sun: SunParams):
    """Lambertian shading of procedural materials at the hit points."""
    mats = textured.materials
    rgb = mats[label].copy()
    if textured.roof_colors:
        lut = np.zeros((max(textured.roof_colors) + 1, 3))
        for b_id, col in textured.roof_colors.items():
            lut[b_id] = col
        sel = label == BUILDING
        rgb[sel] = lut[surface.obj_id.ravel()[idx][sel]]
    x, y = hit_xy
    grain = fbm(x / 6.0 + 17.0 * label, y / 6.0, seed=textured.texture_seed, octaves=4)
    rgb *= (0.75 + 0.5 * grain)[..., None]

    dsm = surface.terrain + surface.obj_height
    gy, gx = np.gradient(dsm, surface.spacing)
    nx, ny = -gx.ravel()[idx], -gy.ravel()[idx]
    norm = np.sqrt(nx * nx + ny * ny + 1.0)
    el = math.radians(sun.elevation)
    az = math.radians(sun.azimuth)
    lx, ly, lz = math.cos(el) * math.sin(az), -math.cos(el) * math.cos(az), math.sin(el)
    lambert = np.clip((nx * lx + ny * ly + lz) / norm, 0.0, 1.0)
    light = (0.35 + 0.65 * lambert)[..., None] * sun.intensity * np.asarray(sun.color)
    return np.clip(np.round(rgb * light * 255.0), 0, 255).astype(np.uint8)


def render(scene, camera: Camera, sun: SunParams, texture_seed=None) -> RasterStack:
    """Render a scene (or an already textured scene) into an aligned raster stack."""
    if isinstance(scene, TexturedScene):
        textured = scene
    else:
        if texture_seed is None:
            texture_seed = scene.plan.seed if scene.plan is not None else 0
        textured = apply_textures(scene, texture_seed)
    sc = textured.scene
    n = camera.image_size

    if camera.is_nadir:
        surface = _evaluate_surface(sc, camera.gsd, n)
        idx = np.arange(n * n).reshape(n, n)
        z_hit = (surface.terrain + surface.obj_height)
    else:
        surface = _evaluate_surface(sc, camera.gsd / 2.0, 2 * n)
        idx, z_hit = _march(surface, camera)

    obj_cls = surface.obj_class.ravel()[idx]
    label = np.where(obj_cls > 0, obj_cls, surface.ground_class.ravel()[idx]).astype(np.uint8)
    if camera.is_nadir:
        ndsm = surface.obj_height.astype(np.float32)
    else:
        ndsm = np.clip(z_hit - surface.terrain.ravel()[idx], 0.0, None).astype(np.float32)
    ndsm[(label != TREE) & (label != BUILDING)] = 0.0

    m = surface.terrain.shape[0]
    hit_x = (idx % m + 0.5) * surface.spacing
    hit_y = (idx // m + 0.5) * surface.spacing
    rgb = _shade(textured, surface, idx, (hit_x, hit_y), label, sun)
    building = (label == BUILDING).astype(np.uint8)
    meta = {"gsd": camera.gsd, "texture_seed": textured.texture_seed}
    if sc.plan is not None:
        meta.update(seed=sc.plan.seed, style=sc.plan.style.name)
    return RasterStack(rgb=rgb, label=label, ndsm=ndsm, building_mask=building, metadata=meta)


def render_pair(post: Scene, pre: Scene, camera: Camera, sun: SunParams, texture_seed_post: int,
                texture_seed_pre: int):
    """Post- and pre-event stacks under one camera and sun; the pre scene is re-textured."""
    return (render(apply_textures(post, texture_seed_post), camera, sun),
            render(apply_textures(pre, texture_seed_pre), camera, sun))


def change_mask(post_mask, pre_mask):
    """Pixels that hold a building after the event but not before."""
    check_same_shape(post_mask, pre_mask, names=["post_mask", "pre_mask"])
    post = np.asarray(post_mask).astype(bool)
    pre = np.asarray(pre_mask).astype(bool)
    return (post & ~pre).astype(np.uint8)
