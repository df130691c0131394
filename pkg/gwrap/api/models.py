from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Vec3 = Tuple[float, float, float]


class StrictModel(BaseModel):
    """Base for configuration sections: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class Box(StrictModel):
    """Axis-aligned box given by its min and max corners."""

    lo: Vec3
    hi: Vec3

    @model_validator(mode="after")
    def check_order(self):
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError("box lo must be componentwise <= hi")
        return self

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of the (M, 3) points inside the closed box."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((points >= np.asarray(self.lo)) & (points <= np.asarray(self.hi)), axis=1)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(np.asarray(self.hi) - np.asarray(self.lo)))


class CoreConfig(StrictModel):
    alpha_max: float = Field(0.999, gt=0.0, lt=1.0)
    support_sigma: float = Field(4.0, gt=0.0)


class FieldsConfig(StrictModel):
    k_neighbors: int = Field(32, ge=1)
    vector_zero_eps: float = Field(1e-8, gt=0.0)
    # None means every camera participates in the vacancy bound
    vacancy_camera_subset: Optional[int] = Field(None, ge=1)
    # seed of the camera subset draw; None means the run seed
    seed: Optional[int] = None


class RenderConfig(StrictModel):
    early_stop_T: float = Field(1e-4, ge=0.0, lt=1.0)
    background: Vec3 = (0.0, 0.0, 0.0)
    median_max_iter: int = Field(60, ge=1)
    median_tol: float = Field(1e-6, gt=0.0)

    @field_validator("background")
    @classmethod
    def validate_background(cls, background):
        if any(c < 0.0 or c > 1.0 for c in background):
            raise ValueError("background channels must lie in [0, 1]")
        return background


class WrapConfig(StrictModel):
    """Orientation-only wrapping schedule."""

    iterations: int = Field(200, ge=0)
    learning_rate: float = Field(0.05, gt=0.0)
    dir_learning_rate: float = Field(0.02, gt=0.0)
    densify: bool = True
    densify_every: int = Field(50, ge=1)
    densify_fraction: float = Field(0.05, gt=0.0, le=0.5)
    fd_step: float = Field(1e-3, gt=0.0)
    views_per_step: int = Field(4, ge=1)
    loss_weight: float = Field(0.05, gt=0.0)
    weight_floor: float = Field(1e-4, gt=0.0)

    model_config = ConfigDict(
        extra="forbid",
        validate_assignment=True,
        json_schema_extra={
            "example": {
                "iterations": 200,
                "learning_rate": 0.05,
                "densify_every": 50,
                "densify_fraction": 0.05,
            }
        },
    )


class PivotMode(str, Enum):
    two = "two"
    dense = "dense"


class MtetConfig(StrictModel):
    pivot_mode: PivotMode = PivotMode.two
    refine_iterations: int = Field(30, ge=0)
    refine_tol: float = Field(1e-3, gt=0.0)


class PamConfig(StrictModel):
    epsilon: float = Field(0.1, gt=0.0)
    newton_steps: int = Field(10, ge=1)
    samples: int = Field(20000, ge=1)
    max_rounds: int = Field(5, ge=1)
    samples_per_tet: int = Field(8, ge=1)
    # None means 5% of the scene bounding-box diagonal
    newton_max_step: Optional[float] = Field(None, gt=0.0)
    roi: Optional[Box] = None


class EvalConfig(StrictModel):
    # None means 1% of the ground-truth crop (or bounding box) diagonal
    tau: Optional[float] = Field(None, gt=0.0)
    uniform_count: int = Field(1_000_000, ge=1)
    oversample_limit: int = Field(100, ge=1)


class RunConfig(StrictModel):
    """Every tunable of the pipeline with its documented default."""

    seed: int = 0
    core: CoreConfig = Field(default_factory=CoreConfig)
    fields: FieldsConfig = Field(default_factory=FieldsConfig)
    render: RenderConfig = Field(default_factory=RenderConfig)
    wrap: WrapConfig = Field(default_factory=WrapConfig)
    mtet: MtetConfig = Field(default_factory=MtetConfig)
    pam: PamConfig = Field(default_factory=PamConfig)
    evaluation: EvalConfig = Field(default_factory=EvalConfig)


# Scene file records

class GaussianRecord(BaseModel):
    mean: Vec3
    scales: Vec3
    rotation: Tuple[float, float, float, float]  # wxyz
    opacity: float
    normal_sign: float
    normal_dir: Vec3
    color: Vec3

    @field_validator("scales")
    @classmethod
    def validate_scales(cls, scales):
        if any(s <= 0.0 for s in scales):
            raise ValueError("scales must be positive")
        return scales

    @field_validator("rotation")
    @classmethod
    def validate_rotation(cls, rotation):
        if sum(q * q for q in rotation) <= 1e-24:
            raise ValueError("quaternion has zero norm")
        return rotation

    @field_validator("normal_dir")
    @classmethod
    def validate_normal_dir(cls, normal_dir):
        if sum(d * d for d in normal_dir) <= 0.0:
            raise ValueError("normal_dir must be nonzero")
        return normal_dir


class CameraRecord(BaseModel):
    fx: float = Field(..., gt=0.0)
    fy: float = Field(..., gt=0.0)
    cx: float
    cy: float
    width: int = Field(..., ge=1)
    height: int = Field(..., ge=1)
    world_from_camera: Tuple[float, ...]  # 3x4 row-major

    @field_validator("world_from_camera")
    @classmethod
    def validate_pose(cls, pose):
        if len(pose) != 12:
            raise ValueError("world_from_camera needs 12 values (3x4 row-major)")
        return pose


# Results

class Protocol(str, Enum):
    legacy = "legacy"
    uniform = "uniform"
    virtual_scan = "virtual_scan"


class EvalResult(BaseModel):
    protocol: Protocol
    precision: float = Field(..., ge=0.0, le=1.0)
    recall: float = Field(..., ge=0.0, le=1.0)
    f1: float = Field(..., ge=0.0, le=1.0)
    chamfer: float = Field(..., ge=0.0)
    tau: float = Field(..., gt=0.0)
    pred_points: int = 0
    gt_points: int = 0

    @model_validator(mode="after")
    def check_f1(self):
        total = self.precision + self.recall
        expected = 2.0 * self.precision * self.recall / total if total > 0 else 0.0
        if abs(self.f1 - expected) > 1e-9:
            raise ValueError("f1 must be the harmonic mean of precision and recall")
        return self


class BiasReport(BaseModel):
    tau: float
    seed: int
    legacy_points: Tuple[int, int]
    uniform_points: Tuple[int, int]
    legacy_f1: Tuple[float, float]
    uniform_f1: Tuple[float, float]
    legacy_delta: float
    uniform_delta: float
    uniform_stable: bool
    tolerance: float = 0.01


class EquivalenceReport(BaseModel):
    """Alpha compositing against ray marching over a set of rays."""

    rays: int
    step: float
    tolerance: float
    max_error: float
    mean_error: float
    worst_ray: int
    passed: bool


class FieldSampleRow(BaseModel):
    x: float
    y: float
    z: float
    vacancy: float
    occupancy: float
    vx: float
    vy: float
    vz: float
    nx: float
    ny: float
    nz: float
    support_count: int


class FixtureKind(str, Enum):
    sphere_shell = "sphere_shell"
    plane_patch = "plane_patch"
    two_plane = "two_plane"
    cube_shell = "cube_shell"


class FixtureParams(StrictModel):
    """Parameters shared by the synthetic scene generators."""

    radius: float = Field(1.0, gt=0.0)
    extent: float = Field(1.0, gt=0.0)
    n: int = Field(400, ge=1)
    n_cams: int = Field(20, ge=0)
    opacity: float = Field(0.95, gt=0.0, lt=1.0)
    thickness: float = Field(0.1, gt=0.0)
    camera_distance: float = Field(3.0, gt=0.0)
    resolution: int = Field(64, ge=1)
    normal_sign: float = 5.0
    color: Vec3 = (0.8, 0.6, 0.4)
    isotropic: bool = False
    gap: float = Field(0.5, gt=0.0)

    @classmethod
    def parse(cls, text: Optional[str]) -> "FixtureParams":
        """Parse 'key=value,key=value'."""
        if not text:
            return cls()
        values = {}
        for item in text.split(","):
            if not item.strip():
                continue
            key, _, raw = item.partition("=")
            values[key.strip()] = raw.strip()
        return cls(**values)


__all__: List[str] = [
    "Box", "CoreConfig", "FieldsConfig", "RenderConfig", "WrapConfig", "PivotMode",
    "MtetConfig", "PamConfig", "EvalConfig", "RunConfig", "GaussianRecord",
    "CameraRecord", "Protocol", "EvalResult", "BiasReport", "EquivalenceReport", "FieldSampleRow",
    "FixtureKind", "FixtureParams",
]
