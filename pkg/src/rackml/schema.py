"""The rack-column feature schema.

Ten structural parameters plus the axial load capacity target.  The order is
canonical: CSV files, model bundles, transforms and attribution vectors all
index features by this order.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    unit: str
    description: str


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureSpec, ...]
    target: FeatureSpec

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @property
    def n_features(self) -> int:
        return len(self.features)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def to_dict(self) -> dict:
        return {
            "features": [
                {"name": f.name, "unit": f.unit, "description": f.description}
                for f in self.features
            ],
            "target": {
                "name": self.target.name,
                "unit": self.target.unit,
                "description": self.target.description,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        feats = tuple(FeatureSpec(f["name"], f["unit"], f["description"]) for f in d["features"])
        t = d["target"]
        return cls(features=feats, target=FeatureSpec(t["name"], t["unit"], t["description"]))


RACK_SCHEMA = FeatureSchema(
    features=(
        FeatureSpec("w", "mm", "back width"),
        FeatureSpec("h", "mm", "total height"),
        FeatureSpec("b", "mm", "back indentation"),
        FeatureSpec("d", "mm", "side fold distance"),
        FeatureSpec("t", "mm", "thickness"),
        FeatureSpec("L", "mm", "column length"),
        FeatureSpec("A", "mm^2", "cross-sectional area"),
        FeatureSpec("Ix", "mm^4", "moment of inertia, strong axis"),
        FeatureSpec("Iy", "mm^4", "moment of inertia, weak axis"),
        FeatureSpec("fy", "MPa", "yield stress"),
    ),
    target=FeatureSpec("P", "kN", "axial load capacity"),
)
