"""CSV/JSON exports for stride logs and per-run manifests."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from .gaits import LegId

JOINT_NAMES = [
    f"{leg.name.lower()}_{joint}"
    for leg in LegId
    for joint in ("abduction", "hip", "knee")
]


@dataclass
class RunManifest:
    """Provenance record written next to every command's outputs."""

    command: str
    args: dict
    config_path: str | None
    seed: int | None
    outputs: list[str] = field(default_factory=list)
    version: str = "0.1.0"
    timestamp: str = ""

    def stamped(self) -> "RunManifest":
        self.timestamp = datetime.now(timezone.utc).isoformat()
        return self

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=1, sort_keys=True)

    def embed_dict(self) -> dict:
        # embedded copies omit the timestamp so reruns stay byte-identical
        data = asdict(self)
        data.pop("timestamp")
        return data


def stride_logs_to_csv(strides, path) -> None:
    """One row per simulation sample across all strides of a trial."""
    header = (
        ["stride", "time_s"]
        + [f"u_{n}" for n in JOINT_NAMES]
        + [f"w_{n}" for n in JOINT_NAMES]
        + [f"f_{leg.name.lower()}_{ax}" for leg in LegId for ax in "xyz"]
        + [f"stance_{leg.name.lower()}" for leg in LegId]
        + ["pos_x", "pos_y", "pos_z", "vel_x", "vel_y", "vel_z"]
        + ["roll", "pitch", "yaw", "omega_x", "omega_y", "omega_z"]
        + [f"foot_{leg.name.lower()}_z" for leg in LegId]
        + ["v_cmd"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for si, log in enumerate(strides):
            n = log.time.shape[0]
            for i in range(n):
                row = (
                    [si, repr(float(log.time[i]))]
                    + [repr(float(x)) for x in log.torques[i]]
                    + [repr(float(x)) for x in log.joint_velocities[i]]
                    + [repr(float(x)) for x in log.forces[i].reshape(12)]
                    + [int(x) for x in log.stance[i]]
                    + [repr(float(x)) for x in log.position[i]]
                    + [repr(float(x)) for x in log.velocity[i]]
                    + [repr(float(x)) for x in log.euler[i]]
                    + [repr(float(x)) for x in log.omega[i]]
                    + [repr(float(log.foot_positions[i, leg, 2])) for leg in LegId]
                    + [repr(float(log.v_cmd))]
                )
                writer.writerow(row)


def stride_summary(strides, metrics_list) -> dict:
    """Per-stride aggregate block for the metrics JSON export."""
    out = []
    for i, (log, m) in enumerate(zip(strides, metrics_list)):
        out.append(
            {
                "stride": i,
                "t_f": float(log.t_f),
                "delta_s": float(log.delta_s),
                "work_j": float(m.work),
                "cot": float(m.cot),
                "stb": float(m.stb),
                "j_e": {repr(c): float(v) for c, v in m.j_e.items()},
                "failed": bool(log.failed),
                "complete": bool(log.complete),
            }
        )
    return {"strides": out}


def write_json(data: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True, allow_nan=True)
