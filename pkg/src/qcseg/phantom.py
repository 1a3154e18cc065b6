"""Synthetic cine phantom cohorts with exact ground-truth labels.

Anatomy is analytic: the LV blood pool is a warped disc inside a
myocardial annulus, the RV a crescent hugging the annulus, the aorta a
pulsatile disc. Masks are rasterized at pixel centers, and end-systolic
radii are calibrated against the pixel counter itself, so the
pixel-counted ejection fraction of every case lands within a pixel's
worth of its sampled target.

``corrupt_labels`` manufactures "erroneous" label maps (dropped frames,
morphological damage, shifts, label swaps, spurious blobs) for training
quality-control classifiers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import ValidationError

SAX_CLASSES = {"background": 0, "lv_blood": 1, "lv_myo": 2, "rv_blood": 3}
AORTA_CLASSES = {"background": 0, "aorta": 1}
TASK_CLASSES = {"sax": SAX_CLASSES, "aorta": AORTA_CLASSES}

CORRUPTION_KINDS = (
    "drop_frame",
    "erode",
    "dilate",
    "spatial_shift",
    "swap_labels",
    "spurious_blob",
)

# fraction of the cycle spent in systole (contraction phase)
SYSTOLE_FRACTION = 0.4


def task_classes(task: str) -> dict[str, int]:
    if task not in TASK_CLASSES:
        raise ValidationError(f"unknown task {task!r}", field="task")
    return TASK_CLASSES[task]


def n_classes(task: str) -> int:
    return len(task_classes(task))


def foreground_classes(task: str) -> dict[str, int]:
    return {k: v for k, v in task_classes(task).items() if v != 0}


@dataclass(frozen=True)
class Geometry:
    """Pixel spacing in mm (x, y) and slice thickness in mm."""

    pixel_spacing: tuple[float, float] = (1.0, 1.0)
    slice_thickness: float = 10.0

    def validate(self):
        if not all(s > 0 for s in self.pixel_spacing):
            raise ValidationError("pixel spacing must be positive", field="pixel_spacing")
        if self.slice_thickness <= 0:
            raise ValidationError("slice thickness must be positive", field="slice_thickness")

    def voxel_volume_mm3(self) -> float:
        return self.pixel_spacing[0] * self.pixel_spacing[1] * self.slice_thickness

    def pixel_area_mm2(self) -> float:
        return self.pixel_spacing[0] * self.pixel_spacing[1]


@dataclass
class LabelMap:
    """Per-pixel class indices, shape (T, S, H, W), one class per pixel."""

    task: str
    masks: np.ndarray

    def __post_init__(self):
        self.masks = np.asarray(self.masks)

    def validate(self):
        classes = task_classes(self.task)
        if self.masks.ndim != 4:
            raise ValidationError("masks must have shape (T, S, H, W)", field="masks")
        if not np.issubdtype(self.masks.dtype, np.integer):
            raise ValidationError("masks must be integer-typed", field="masks")
        lo, hi = self.masks.min(), self.masks.max()
        if lo < 0 or hi >= len(classes):
            raise ValidationError(
                f"class indices must lie in [0, {len(classes) - 1}], found [{lo}, {hi}]",
                field="masks",
            )

    @property
    def shape(self):
        return self.masks.shape

    def copy(self) -> "LabelMap":
        return LabelMap(self.task, self.masks.copy())

    def class_mask(self, class_id: int) -> np.ndarray:
        return self.masks == class_id


@dataclass
class CineCase:
    """One subject's cine stack: intensities, geometry, optional labels."""

    case_id: str
    images: np.ndarray  # (T, S, H, W) float32 in [0, 1]
    geometry: Geometry
    gt_labels: Optional[LabelMap] = None
    subject_params: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.images.shape

    def validate(self):
        if self.images.ndim != 4:
            raise ValidationError("images must have shape (T, S, H, W)", field="images")
        if not np.all(np.isfinite(self.images)):
            raise ValidationError("images must be finite", field="images")
        if self.gt_labels is not None:
            self.gt_labels.validate()
            if self.gt_labels.masks.shape != self.images.shape:
                raise ValidationError(
                    "gt_labels must cover every frame and slice", field="gt_labels"
                )


@dataclass
class CohortSpec:
    """Declarative description of a synthetic cohort.

    ``frames_T`` and ``slices_S`` default per task (aorta: 100 frames,
    single slice; sax: 50 frames, 10 slices) when left as None.
    """

    n_subjects: int
    task: str = "sax"
    frames_T: Optional[int] = None
    slices_S: Optional[int] = None
    height: int = 64
    width: int = 64
    pixel_spacing: tuple[float, float] = (1.0, 1.0)
    slice_thickness: float = 10.0
    target_lvef_range: tuple[float, float] = (0.50, 0.70)
    target_rvef_range: tuple[float, float] = (0.40, 0.60)
    aortic_pulsatility_range: tuple[float, float] = (0.15, 0.35)
    noise_level: float = 0.06
    disease_fraction: float = 0.0
    hard_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.frames_T is None:
            self.frames_T = 100 if self.task == "aorta" else 50
        if self.slices_S is None:
            self.slices_S = 1 if self.task == "aorta" else 10

    def validate(self):
        task_classes(self.task)
        if self.n_subjects < 0:
            raise ValidationError("must be >= 0", field="n_subjects")
        if self.frames_T < 2:
            raise ValidationError("must be >= 2", field="frames_T")
        if self.slices_S < 1:
            raise ValidationError("must be >= 1", field="slices_S")
        if self.task == "aorta" and self.slices_S != 1:
            raise ValidationError("aorta task is single-slice", field="slices_S")
        if self.height < 16 or self.width < 16:
            raise ValidationError("grid must be at least 16x16", field="height")
        for name, rng_ in (
            ("target_lvef_range", self.target_lvef_range),
            ("target_rvef_range", self.target_rvef_range),
        ):
            lo, hi = rng_
            if not (0.0 < lo <= hi < 1.0):
                raise ValidationError("EF range must lie inside (0, 1)", field=name)
        lo, hi = self.aortic_pulsatility_range
        if not (0.0 < lo <= hi):
            raise ValidationError("must be positive", field="aortic_pulsatility_range")
        if not all(s > 0 for s in self.pixel_spacing):
            raise ValidationError("must be positive", field="pixel_spacing")
        if self.slice_thickness <= 0:
            raise ValidationError("must be positive", field="slice_thickness")
        if self.noise_level < 0:
            raise ValidationError("must be >= 0", field="noise_level")
        if not (0.0 <= self.disease_fraction <= 1.0):
            raise ValidationError("must lie in [0, 1]", field="disease_fraction")
        if not (0.0 <= self.hard_fraction <= 1.0):
            raise ValidationError("must lie in [0, 1]", field="hard_fraction")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValidationError("must be a non-negative integer", field="seed")

    def geometry(self) -> Geometry:
        return Geometry(tuple(self.pixel_spacing), self.slice_thickness)


@dataclass
class CorruptionSpec:
    """One label-map corruption: what, how hard, and on which frames."""

    kind: str
    severity: int = 2
    frame_range: Optional[tuple[int, ...]] = None  # None = all frames
    target_class: int = 1
    seed: int = 0

    def validate(self, T: int, task: str):
        if self.kind not in CORRUPTION_KINDS:
            raise ValidationError(
                f"unknown kind {self.kind!r}; expected one of {CORRUPTION_KINDS}", field="kind"
            )
        if self.severity < 0:
            raise ValidationError("must be >= 0", field="severity")
        frames = self.frames(T)
        if any(t < 0 or t >= T for t in frames):
            raise ValidationError(f"frame_range must lie within [0, {T})", field="frame_range")
        if self.target_class not in task_classes(task).values():
            raise ValidationError(
                f"class {self.target_class} not valid for task {task!r}", field="target_class"
            )

    def frames(self, T: int) -> tuple[int, ...]:
        if self.frame_range is None:
            return tuple(range(T))
        return tuple(sorted(set(int(t) for t in self.frame_range)))


def cardiac_phase(T: int, es_frame: int) -> np.ndarray:
    """Raised-cosine contraction profile: 0 at frame 0 (ED), 1 at ES, back to 0.

    Periodic over T frames; systole occupies frames [0, es_frame].
    """
    t = np.arange(T, dtype=np.float64)
    phi = np.empty(T, dtype=np.float64)
    sys_part = t <= es_frame
    phi[sys_part] = 0.5 * (1.0 - np.cos(np.pi * t[sys_part] / es_frame))
    dia = ~sys_part
    phi[dia] = 0.5 * (1.0 + np.cos(np.pi * (t[dia] - es_frame) / (T - es_frame)))
    return phi


def _radius_for_count(sorted_q: np.ndarray, target: float) -> float:
    """Radius r such that #{q < r} is as close as possible to ``target``.

    ``sorted_q`` holds the (taper-normalized) radii at which each candidate
    pixel enters the structure; counts are piecewise constant in r, so we
    pick a midpoint between adjacent distinct entry radii.
    """
    n = len(sorted_q)
    k = int(round(target))
    k = max(1, min(k, n))
    # entry value of the k-th pixel; expand to the full run of ties
    v = sorted_q[k - 1]
    j_hi = int(np.searchsorted(sorted_q, v, side="right"))  # count just above v
    j_lo = int(np.searchsorted(sorted_q, v, side="left"))  # count just below v
    # candidate counts: j_lo (r just below v) or j_hi (r just above v)
    if abs(j_hi - target) <= abs(j_lo - target) or j_lo == 0:
        upper = sorted_q[j_hi] if j_hi < n else v + 1.0
        return 0.5 * (v + upper)
    lower = sorted_q[j_lo - 1] if j_lo > 0 else 0.0
    return 0.5 * (lower + v)


def _warped_radius(H, W, cx, cy, angle, ax, ay, off_u=0.0, off_v=0.0):
    """Canonical elliptic radius field for a warped disc.

    The disc is centered at (cx+offset, cy) in a frame rotated by ``angle``
    and anisotropically scaled by (ax, ay); level set rho == r is an ellipse.
    """
    y, x = np.mgrid[0:H, 0:W].astype(np.float64)
    dx = x - cx
    dy = y - cy
    u = np.cos(angle) * dx + np.sin(angle) * dy - off_u
    v = -np.sin(angle) * dx + np.cos(angle) * dy - off_v
    return np.sqrt((u / ax) ** 2 + (v / ay) ** 2)


def _smoothstep(signed: np.ndarray, edge: float = 0.9) -> np.ndarray:
    # soft membership: 1 well inside, 0 well outside, linear ramp at the edge
    return np.clip(0.5 + signed / (2.0 * edge), 0.0, 1.0)


def _case_rng(seed: int, index: int) -> np.random.Generator:
    # sub-seed per case so parallel and serial generation agree
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _sample_ef(rng, lo, hi, diseased):
    span = hi - lo
    if diseased:
        return rng.uniform(lo, lo + 0.3 * span)
    return rng.uniform(lo + 0.4 * span, hi)


def _make_sax_case(spec: CohortSpec, index: int) -> CineCase:
    rng = _case_rng(spec.seed, index)
    T, S, H, W = spec.frames_T, spec.slices_S, spec.height, spec.width
    m = min(H, W)

    cx = W * rng.uniform(0.46, 0.58)
    cy = H * rng.uniform(0.44, 0.56)
    angle = rng.uniform(0.0, np.pi)
    log_aspect = rng.uniform(-0.14, 0.14)
    ax_, ay_ = math.exp(log_aspect), math.exp(-log_aspect)

    r_lv_ed = rng.uniform(0.16, 0.23) * m
    wall_ed = max(2.6, rng.uniform(0.050, 0.072) * m)
    d_rv = (r_lv_ed + wall_ed) * rng.uniform(1.00, 1.12)
    rv_side = rng.choice([-1.0, 1.0])
    off_v = rng.uniform(-0.18, 0.18) * d_rv
    r_rv_ed = rng.uniform(0.72, 0.95) * (r_lv_ed + wall_ed)

    diseased = bool(rng.uniform() < spec.disease_fraction)
    lvef = float(_sample_ef(rng, *spec.target_lvef_range, diseased))
    rvef = float(_sample_ef(rng, *spec.target_rvef_range, diseased))

    es_frame = min(max(1, round(SYSTOLE_FRACTION * T)), T - 1)
    phi = cardiac_phase(T, es_frame)

    if S > 1:
        taper = np.linspace(rng.uniform(0.55, 0.70), 1.0, S)
    else:
        taper = np.ones(1)
    rv_present = np.ones(S, dtype=bool)
    if S > 1:
        rv_present[0] = False  # apical-most slice has no RV

    rho_lv = _warped_radius(H, W, cx, cy, angle, ax_, ay_)
    rho_rv = _warped_radius(H, W, cx, cy, angle, ax_, ay_, off_u=rv_side * d_rv, off_v=off_v)

    # LV: calibrate r_lv_es so the pixel-counted EF matches the target
    q_lv = np.sort(np.concatenate([(rho_lv / taper[s]).ravel() for s in range(S)]))
    cnt_lv_ed = int(np.searchsorted(q_lv, r_lv_ed, side="left"))
    r_lv_es = _radius_for_count(q_lv, (1.0 - lvef) * cnt_lv_ed)
    cnt_lv_es = int(np.searchsorted(q_lv, r_lv_es, side="left"))

    # epicardial boundary stays put over the cycle (the wall thickens as the
    # pool shrinks), so RV eligibility is time-invariant and RV volume is
    # monotone in its own radius
    r_epi = [r_lv_ed * taper[s] + wall_ed for s in range(S)]

    def _rv_count(r_rv):
        total = 0
        for s in range(S):
            if not rv_present[s]:
                continue
            eligible = rho_lv >= r_epi[s]
            total += int(np.count_nonzero(eligible & (rho_rv < r_rv * taper[s])))
        return total

    cnt_rv_ed = _rv_count(r_rv_ed)
    q_parts = []
    for s in range(S):
        if not rv_present[s]:
            continue
        eligible = rho_lv >= r_epi[s]
        q_parts.append((rho_rv[eligible] / taper[s]).ravel())
    q_rv = np.sort(np.concatenate(q_parts)) if q_parts else np.array([1.0])
    r_rv_es = _radius_for_count(q_rv, (1.0 - rvef) * max(cnt_rv_ed, 1))
    cnt_rv_es = int(np.searchsorted(q_rv, r_rv_es, side="left"))

    r_lv_t = r_lv_ed + (r_lv_es - r_lv_ed) * phi
    r_rv_t = r_rv_ed + (r_rv_es - r_rv_ed) * phi

    bg = rng.uniform(0.12, 0.22)
    myo = rng.uniform(0.38, 0.50)
    lv_lvl = rng.uniform(0.72, 0.92)
    rv_lvl = np.clip(lv_lvl + rng.uniform(-0.08, 0.05), 0.0, 1.0)
    hard = bool(rng.uniform() < spec.hard_fraction)
    if hard:
        # barely-there contrast and heavy noise: segmenters trained on the
        # normal population produce implausible output here
        mid = 0.45
        myo = mid + (myo - mid) * 0.15
        lv_lvl = mid + (lv_lvl - mid) * 0.15
        rv_lvl = mid + (rv_lvl - mid) * 0.15
        bg = mid + (bg - mid) * 0.30
    noise_sd = spec.noise_level * rng.uniform(0.6, 1.6) * (2.3 if hard else 1.0)

    b1, b2, b3 = rng.uniform(-0.22, 0.22, size=3)
    yy, xx = np.mgrid[0:H, 0:W]
    xn = xx / max(W - 1, 1) - 0.5
    yn = yy / max(H - 1, 1) - 0.5
    bias = 1.0 + b1 * xn + b2 * yn + b3 * xn * yn

    images = np.empty((T, S, H, W), dtype=np.float32)
    masks = np.zeros((T, S, H, W), dtype=np.uint8)
    for t in range(T):
        for s in range(S):
            r_lv = r_lv_t[t] * taper[s]
            r_rv = r_rv_t[t] * taper[s]

            lv_mask = rho_lv < r_lv
            myo_mask = (rho_lv >= r_lv) & (rho_lv < r_epi[s])
            plane = np.zeros((H, W), dtype=np.uint8)
            if rv_present[s]:
                rv_mask = (rho_rv < r_rv) & (rho_lv >= r_epi[s])
                plane[rv_mask] = SAX_CLASSES["rv_blood"]
            plane[myo_mask] = SAX_CLASSES["lv_myo"]
            plane[lv_mask] = SAX_CLASSES["lv_blood"]
            masks[t, s] = plane

            m_epi = _smoothstep(r_epi[s] - rho_lv)
            m_lv = _smoothstep(r_lv - rho_lv)
            img = bg + (myo - bg) * m_epi + (lv_lvl - myo) * m_lv
            if rv_present[s]:
                m_rv = _smoothstep(r_rv - rho_rv) * (1.0 - m_epi)
                img = img + (rv_lvl - bg) * m_rv
            img = img * bias + rng.normal(0.0, noise_sd, size=(H, W))
            images[t, s] = np.clip(img, 0.0, 1.0)

    params = {
        "ed_frame": 0,
        "es_frame": int(es_frame),
        "center": [float(cx), float(cy)],
        "angle": float(angle),
        "aspect": [float(ax_), float(ay_)],
        "r_lv_ed": float(r_lv_ed),
        "r_lv_es": float(r_lv_es),
        "wall_ed": float(wall_ed),
        "r_rv_ed": float(r_rv_ed),
        "r_rv_es": float(r_rv_es),
        "target_lvef": lvef,
        "target_rvef": rvef,
        "achieved_lvef_px": 1.0 - cnt_lv_es / max(cnt_lv_ed, 1),
        "achieved_rvef_px": 1.0 - cnt_rv_es / max(cnt_rv_ed, 1),
        "diseased": diseased,
        "hard": hard,
        "levels": {"bg": float(bg), "myo": float(myo), "lv": float(lv_lvl), "rv": float(rv_lvl)},
        "noise_sd": float(noise_sd),
    }
    case_id = f"sax-s{spec.seed}-n{index:04d}"
    return CineCase(case_id, images, spec.geometry(), LabelMap("sax", masks), params)


def _make_aorta_case(spec: CohortSpec, index: int) -> CineCase:
    rng = _case_rng(spec.seed, index)
    T, H, W = spec.frames_T, spec.height, spec.width
    m = min(H, W)

    cx = W * rng.uniform(0.42, 0.58)
    cy = H * rng.uniform(0.42, 0.58)
    angle = rng.uniform(0.0, np.pi)
    log_aspect = rng.uniform(-0.12, 0.12)
    ax_, ay_ = math.exp(log_aspect), math.exp(-log_aspect)
    r_dia = rng.uniform(0.12, 0.19) * m
    puls = rng.uniform(*spec.aortic_pulsatility_range)

    # aortic area peaks in systole: reuse the contraction profile as expansion
    es_frame = min(max(1, round(SYSTOLE_FRACTION * T)), T - 1)
    phi = cardiac_phase(T, es_frame)

    rho = _warped_radius(H, W, cx, cy, angle, ax_, ay_)
    q = np.sort(rho.ravel())
    cnt_dia = int(np.searchsorted(q, r_dia, side="left"))
    r_sys = _radius_for_count(q, (1.0 + puls) * cnt_dia)
    cnt_sys = int(np.searchsorted(q, r_sys, side="left"))
    r_t = r_dia + (r_sys - r_dia) * phi

    bg = rng.uniform(0.12, 0.22)
    ao_lvl = rng.uniform(0.70, 0.90)
    hard = bool(rng.uniform() < spec.hard_fraction)
    if hard:
        mid = 0.45
        ao_lvl = mid + (ao_lvl - mid) * 0.45
        bg = mid + (bg - mid) * 0.6
    noise_sd = spec.noise_level * rng.uniform(0.6, 1.6) * (1.6 if hard else 1.0)

    b1, b2, b3 = rng.uniform(-0.22, 0.22, size=3)
    yy, xx = np.mgrid[0:H, 0:W]
    xn = xx / max(W - 1, 1) - 0.5
    yn = yy / max(H - 1, 1) - 0.5
    bias = 1.0 + b1 * xn + b2 * yn + b3 * xn * yn

    images = np.empty((T, 1, H, W), dtype=np.float32)
    masks = np.zeros((T, 1, H, W), dtype=np.uint8)
    for t in range(T):
        mask = rho < r_t[t]
        masks[t, 0][mask] = AORTA_CLASSES["aorta"]
        img = bg + (ao_lvl - bg) * _smoothstep(r_t[t] - rho)
        img = img * bias + rng.normal(0.0, noise_sd, size=(H, W))
        images[t, 0] = np.clip(img, 0.0, 1.0)

    params = {
        "ed_frame": 0,
        "es_frame": int(es_frame),
        "center": [float(cx), float(cy)],
        "angle": float(angle),
        "aspect": [float(ax_), float(ay_)],
        "r_dia": float(r_dia),
        "r_sys": float(r_sys),
        "target_pulsatility": float(puls),
        "achieved_pulsatility_px": cnt_sys / max(cnt_dia, 1) - 1.0,
        "hard": hard,
        "levels": {"bg": float(bg), "aorta": float(ao_lvl)},
        "noise_sd": float(noise_sd),
    }
    case_id = f"aorta-s{spec.seed}-n{index:04d}"
    return CineCase(case_id, images, spec.geometry(), LabelMap("aorta", masks), params)


def generate_cohort(spec: CohortSpec) -> list[CineCase]:
    """Generate ``spec.n_subjects`` seeded cases with exact ground truth.

    Identical specs (including seed) produce bit-identical cohorts; each
    case only consumes its own (seed, index)-derived stream.
    """
    spec.validate()
    maker = _make_aorta_case if spec.task == "aorta" else _make_sax_case
    return [maker(spec, i) for i in range(spec.n_subjects)]


def _disk_footprint(radius: int) -> np.ndarray:
    r = int(radius)
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return (yy * yy + xx * xx) <= r * r


def corrupt_labels(labels: LabelMap, spec: CorruptionSpec) -> LabelMap:
    """Damage a label map to manufacture an "erroneous" example.

    Frames outside ``spec.frame_range`` are untouched; severity 0 is the
    identity for every kind. The result is always a valid partition.
    """
    labels.validate()
    T = labels.masks.shape[0]
    spec.validate(T, labels.task)

    out = labels.copy()
    if spec.severity == 0:
        return out
    frames = spec.frames(T)
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 0xC0FF]))
    classes = task_classes(labels.task)
    n_cls = len(classes)
    tgt = spec.target_class

    if spec.kind == "drop_frame":
        for t in frames:
            out.masks[t] = 0

    elif spec.kind in ("erode", "dilate"):
        foot = _disk_footprint(spec.severity)
        op = ndimage.binary_erosion if spec.kind == "erode" else ndimage.binary_dilation
        for t in frames:
            for s in range(out.masks.shape[1]):
                plane = out.masks[t, s]
                mask = plane == tgt
                new = op(mask, structure=foot)
                if spec.kind == "erode":
                    plane[mask & ~new] = 0
                else:
                    plane[new] = tgt

    elif spec.kind == "spatial_shift":
        # a pure translation keeps the target's own area; pick a seeded
        # direction that disturbs at least one structure count (overlap or
        # border clipping) whenever the geometry allows it
        base_ang = rng.uniform(0.0, 2.0 * np.pi)
        fg = [c for c in task_classes(labels.task).values() if c != 0]

        def _apply(dy, dx, masks):
            new = masks.copy()
            for t in frames:
                for s in range(new.shape[1]):
                    plane = new[t, s]
                    mask = plane == tgt
                    shifted = np.zeros_like(mask)
                    src = mask[
                        max(0, -dy) : mask.shape[0] - max(0, dy),
                        max(0, -dx) : mask.shape[1] - max(0, dx),
                    ]
                    shifted[
                        max(0, dy) : mask.shape[0] - max(0, -dy),
                        max(0, dx) : mask.shape[1] - max(0, -dx),
                    ] = src
                    plane[mask] = 0
                    plane[shifted] = tgt
            return new

        def _counts(masks):
            return [(masks[list(frames)] == c).sum() for c in fg]

        chosen = None
        for k in range(8):
            ang = base_ang + k * np.pi / 4.0
            dy = int(round(spec.severity * math.sin(ang)))
            dx = int(round(spec.severity * math.cos(ang)))
            if dy == 0 and dx == 0:
                dx = spec.severity
            candidate = _apply(dy, dx, out.masks)
            chosen = candidate
            if _counts(candidate) != _counts(out.masks):
                break
        out.masks = chosen

    elif spec.kind == "swap_labels":
        if n_cls > 2:
            partner = tgt % (n_cls - 1) + 1 if tgt != 0 else 1
            if partner == tgt:
                partner = tgt - 1 if tgt > 1 else 2
        else:
            partner = 0  # binary task: invert against background
        for t in frames:
            plane = out.masks[t]
            a = plane == tgt
            b = plane == partner
            plane[a] = partner
            plane[b] = tgt

    elif spec.kind == "spurious_blob":
        H, W = out.masks.shape[2], out.masks.shape[3]
        foot = _disk_footprint(spec.severity)
        fh, fw = foot.shape
        for t in frames:
            for s in range(out.masks.shape[1]):
                plane = out.masks[t, s]
                placed = False
                for _ in range(64):
                    cy = int(rng.integers(0, H))
                    cx = int(rng.integers(0, W))
                    y0, x0 = cy - spec.severity, cx - spec.severity
                    ys = slice(max(0, y0), min(H, y0 + fh))
                    xs = slice(max(0, x0), min(W, x0 + fw))
                    sub = foot[ys.start - y0 : ys.stop - y0, xs.start - x0 : xs.stop - x0]
                    if np.any(sub & (plane[ys, xs] != tgt)):
                        plane[ys, xs][sub] = tgt
                        placed = True
                        break
                if not placed:
                    raise ValidationError(
                        "could not place a spurious blob that changes the map", field="severity"
                    )
    out.validate()
    return out
