"""File formats: raw I/Q records, data cubes, dataset manifests, feature CSV.

Raw signals are little-endian float32 interleaved I/Q.  Cubes use the same
encoding with fast time as the fastest-varying index, then element, then slow
time.  A dataset directory holds ``manifest.json`` plus one raw file per
measurement; features travel as CSV with a mandatory header.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cohort import GaussPulse, Measurement, PersonProfile
from .errors import IoError, ManifestError
from .radar import DataCube, RadarConfig
from .signals import ComplexSeries

MANIFEST_NAME = "manifest.json"


# --- raw I/Q records --------------------------------------------------------

def write_iq(path, samples: np.ndarray) -> None:
    samples = np.asarray(samples, dtype=np.complex128).ravel()
    interleaved = np.empty(2 * samples.size, dtype="<f4")
    interleaved[0::2] = samples.real
    interleaved[1::2] = samples.imag
    interleaved.tofile(path)


def read_iq(path) -> np.ndarray:
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % 2:
        raise IoError(f"{path}: odd float count, not interleaved I/Q")
    return raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)


def write_cube(path, cube: DataCube) -> None:
    # C-order flattening puts fast time fastest, then element, then slow time
    write_iq(path, cube.values)


def read_cube(path, config: RadarConfig, n_slow: int) -> DataCube:
    flat = read_iq(path)
    expected = n_slow * config.n_virtual * config.n_fast
    if flat.size != expected:
        raise IoError(
            f"{path}: {flat.size} samples, expected {expected} "
            f"({n_slow} x {config.n_virtual} x {config.n_fast})"
        )
    return DataCube(
        flat.reshape(n_slow, config.n_virtual, config.n_fast), config
    )


# --- dataset directories ----------------------------------------------------

def _profile_to_dict(p: PersonProfile) -> dict:
    d = dataclasses.asdict(p)
    d["pulse_template"] = [dataclasses.asdict(g) for g in p.pulse_template]
    return d


def _profile_from_dict(d: dict) -> PersonProfile:
    template = tuple(GaussPulse(**g) for g in d["pulse_template"])
    return PersonProfile(**{**d, "pulse_template": template})


def save_dataset(
    out_dir,
    measurements: list[Measurement],
    profiles: list[PersonProfile],
    fs: float,
    duration: float,
    mode: str,
    seed: int,
    snr_db: float | None,
    radar: RadarConfig | None = None,
    dataset_id: str = "cohort",
) -> dict:
    """Write one raw file per measurement plus the manifest; returns the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for m in measurements:
        name = f"{m.label}_{m.session_id}_r{m.repetition}"
        record = {
            "file": f"{name}.iq",
            "label": m.label,
            "session_id": m.session_id,
            "repetition": m.repetition,
        }
        if m.is_cube:
            cube: DataCube = m.signal
            write_cube(out_dir / record["file"], cube)
            record["n_slow"] = cube.n_slow
        else:
            series: ComplexSeries = m.signal
            write_iq(out_dir / record["file"], series.samples)
            record["n_samples"] = len(series)
        records.append(record)
    manifest = {
        "dataset_id": dataset_id,
        "fs": fs,
        "duration": duration,
        "mode": mode,
        "seed": seed,
        "snr_db": snr_db,
        "radar": dataclasses.asdict(radar) if radar is not None else None,
        "profiles": [_profile_to_dict(p) for p in profiles],
        "records": records,
    }
    with open(out_dir / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest


def load_manifest(data_dir) -> dict:
    path = Path(data_dir) / MANIFEST_NAME
    if not path.exists():
        raise ManifestError(f"no {MANIFEST_NAME} in {data_dir}")
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
    for key in ("fs", "mode", "records"):
        if key not in manifest:
            raise ManifestError(f"{path}: missing required key {key!r}")
    return manifest


def manifest_profiles(manifest: dict) -> list[PersonProfile]:
    return [_profile_from_dict(d) for d in manifest.get("profiles", [])]


def manifest_radar(manifest: dict) -> RadarConfig:
    radar = manifest.get("radar")
    if radar is None:
        return RadarConfig(fs_slow=manifest["fs"])
    return RadarConfig(**radar)


def load_record(data_dir, manifest: dict, record: dict) -> Measurement:
    """Materialize one manifest record as a Measurement."""
    path = Path(data_dir) / record["file"]
    if not path.exists():
        raise ManifestError(f"manifest references missing file {path}")
    if manifest["mode"] == "cube":
        cube = read_cube(path, manifest_radar(manifest), record["n_slow"])
        signal: ComplexSeries | DataCube = cube
    else:
        signal = ComplexSeries(read_iq(path), manifest["fs"])
    return Measurement(
        signal, record["label"], record["session_id"], record["repetition"]
    )


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


# --- feature CSV ------------------------------------------------------------

FEATURE_META_COLUMNS = ["sample_id", "label", "session_id", "segment_index", "kind"]


@dataclass
class FeatureTable:
    """Feature CSV contents: row metadata plus the value matrix."""

    sample_ids: list[str]
    labels: np.ndarray
    sessions: np.ndarray
    segments: np.ndarray
    kind: str
    values: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


def write_features(path, rows: list[dict], n_values: int) -> None:
    """Rows carry the metadata keys plus a ``values`` array of fixed length."""
    header = FEATURE_META_COLUMNS + [f"c{i}" for i in range(n_values)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            values = row["values"]
            if len(values) != n_values:
                raise IoError(
                    f"row {row['sample_id']}: {len(values)} values, "
                    f"expected {n_values}"
                )
            writer.writerow(
                [row[k] for k in FEATURE_META_COLUMNS]
                + [f"{v:.17g}" for v in values]
            )


def read_features(path) -> FeatureTable:
    path = Path(path)
    if not path.exists():
        raise IoError(f"feature file {path} does not exist")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IoError(f"{path}: empty feature file") from None
        if header[: len(FEATURE_META_COLUMNS)] != FEATURE_META_COLUMNS:
            raise IoError(f"{path}: unexpected header {header[:5]}")
        sample_ids, labels, sessions, segments, kinds, values = [], [], [], [], [], []
        for line in reader:
            if not line:
                continue
            sample_ids.append(line[0])
            labels.append(line[1])
            sessions.append(line[2])
            segments.append(int(line[3]))
            kinds.append(line[4])
            values.append([float(v) for v in line[5:]])
    if not values:
        raise IoError(f"{path}: no feature rows")
    kind_set = set(kinds)
    if len(kind_set) != 1:
        raise IoError(f"{path}: mixed feature kinds {sorted(kind_set)}")
    return FeatureTable(
        sample_ids=sample_ids,
        labels=np.asarray(labels),
        sessions=np.asarray(sessions),
        segments=np.asarray(segments, dtype=int),
        kind=kind_set.pop(),
        values=np.asarray(values, dtype=np.float64),
    )
