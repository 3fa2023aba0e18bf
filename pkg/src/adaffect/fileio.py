"""On-disk formats: WAV audio, binary PPM frame directories, EEG binary
epochs with JSON sidecars, feature/prediction CSVs, and atomic writes.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .core import AffectLabel, FeatureMatrix, Quadrant


def atomic_write_bytes(path, data: bytes):
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def fmt(x) -> str:
    """Full-precision decimal rendering that round-trips floats."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ---------------------------------------------------------------- WAV audio

def write_wav(path, samples: np.ndarray, sample_rate: int):
    """Write mono or multichannel float samples in [-1,1] as 32-bit float WAV."""
    data = np.asarray(samples, dtype=np.float32)
    buf = io.BytesIO()
    wavfile.write(buf, int(sample_rate), data)
    atomic_write_bytes(path, buf.getvalue())


def read_wav(path):
    """Read a PCM WAV (16-bit int or 32-bit float) into float64 in [-1,1].

    Returns (samples, sample_rate, channels) with samples flattened
    interleaved for multichannel input.
    """
    sample_rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        data = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype}")
    channels = 1 if data.ndim == 1 else data.shape[1]
    return data.reshape(-1), int(sample_rate), channels


# ------------------------------------------------------------- PPM frames

def write_ppm(path, frame: np.ndarray):
    """Write one H x W x 3 float frame in [0,1] as binary PPM (P6, maxval 255)."""
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError("frame must be H x W x 3")
    h, w, _ = frame.shape
    data = np.clip(np.rint(frame * 255.0), 0, 255).astype(np.uint8)
    atomic_write_bytes(path, b"P6\n%d %d\n255\n" % (w, h) + data.tobytes())


def read_ppm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed, followed by a single whitespace byte.
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.match(rb"(\s*(?:#[^\n]*\n)*\s*)(\S+)", raw[pos:])
        if not m:
            raise ValueError(f"{path}: truncated PPM header")
        tokens.append(m.group(2))
        pos += m.end()
    if tokens[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (P6) file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 supported")
    pos += 1  # single whitespace after maxval
    pixels = np.frombuffer(raw, dtype=np.uint8, count=w * h * 3, offset=pos)
    return pixels.reshape(h, w, 3).astype(np.float64) / 255.0


def write_frame_dir(dirpath, frames: np.ndarray, fps: float):
    """Write frames as frame_%06d.ppm plus an fps.txt sidecar."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        write_ppm(dirpath / f"frame_{i:06d}.ppm", frame)
    atomic_write_text(dirpath / "fps.txt", fmt(float(fps)) + "\n")


def read_frame_dir(dirpath):
    """Read a frame_%06d.ppm directory; returns (frames array, fps)."""
    dirpath = Path(dirpath)
    fps_file = dirpath / "fps.txt"
    if not fps_file.exists():
        raise FileNotFoundError(f"{dirpath}: missing fps.txt sidecar")
    fps = float(fps_file.read_text().strip())
    paths = sorted(dirpath.glob("frame_*.ppm"))
    if not paths:
        raise FileNotFoundError(f"{dirpath}: no frame_*.ppm files")
    frames = np.stack([read_ppm(p) for p in paths])
    return frames, fps


# ------------------------------------------------------------ EEG epochs

def write_eeg_epoch(dirpath, name, data, baseline, sidecar: dict):
    """Write one epoch as <name>.f32 (channel-major float32, baseline samples
    first) plus a <name>.json sidecar."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    data = np.asarray(data, dtype=np.float32)
    if baseline is not None:
        baseline = np.asarray(baseline, dtype=np.float32)
        blob = np.concatenate([baseline, data], axis=1)
        baseline_offset = baseline.shape[1]
    else:
        blob = data
        baseline_offset = 0
    meta = {
        "channels": int(data.shape[0]),
        "sample_rate": int(sidecar.get("sample_rate", 128)),
        "samples": int(data.shape[1]),
        "stimulus_id": str(sidecar.get("stimulus_id", name)),
        "clean": bool(sidecar.get("clean", True)),
        "baseline_offset": int(baseline_offset),
    }
    for extra in ("label", "quadrant"):
        if extra in sidecar and sidecar[extra] is not None:
            meta[extra] = sidecar[extra]
    atomic_write_bytes(dirpath / f"{name}.f32", blob.astype("<f4").tobytes())
    atomic_write_text(dirpath / f"{name}.json", json.dumps(meta, sort_keys=True, indent=2) + "\n")


def read_eeg_epoch(bin_path):
    """Read one epoch binary + sidecar; returns (data, baseline, meta)."""
    bin_path = Path(bin_path)
    meta = json.loads(bin_path.with_suffix(".json").read_text())
    channels = int(meta["channels"])
    samples = int(meta["samples"])
    offset = int(meta.get("baseline_offset", 0))
    blob = np.frombuffer(bin_path.read_bytes(), dtype="<f4")
    expected = channels * (samples + offset)
    if blob.size != expected:
        raise ValueError(f"{bin_path}: expected {expected} floats, found {blob.size}")
    blob = blob.reshape(channels, samples + offset).astype(np.float64)
    baseline = blob[:, :offset] if offset else None
    return blob[:, offset:], baseline, meta


def list_eeg_epochs(dirpath):
    return sorted(Path(dirpath).glob("*.f32"))


# ------------------------------------------------------------- CSV tables

def write_feature_csv(path, features: FeatureMatrix, names: list[str] | None = None):
    """item_id,label,quadrant,then one column per feature dimension."""
    d = features.n_dims
    names = names or [f"f{j}" for j in range(d)]
    if len(names) != d:
        raise ValueError("feature name count must match dimensionality")
    lines = ["item_id,label,quadrant," + ",".join(names)]
    for i in range(features.n_items):
        row = [features.item_ids[i], features.labels[i].value, features.quadrants[i].code]
        row += [fmt(v) for v in features.X[i]]
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_feature_csv(path) -> FeatureMatrix:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["item_id", "label", "quadrant"]:
            raise ValueError(f"{path}: expected header item_id,label,quadrant,...")
        ids, labels, quads, rows = [], [], [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            labels.append(AffectLabel.from_code(row[1]))
            quads.append(Quadrant.from_code(row[2]))
            rows.append([float(v) for v in row[3:]])
    return FeatureMatrix(np.asarray(rows, dtype=float), labels, quads, ids)


def write_descriptor_csv(path, series):
    """second index column plus one named column per descriptor."""
    lines = ["second," + ",".join(series.names)]
    for s, row in enumerate(series.values):
        lines.append(str(s) + "," + ",".join(fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_spectrogram_csv(path, sg):
    """Magnitude rows preceded by a parameter header line."""
    header = (
        f"# window_ms={fmt(sg.window_ms)},hop_ms={fmt(sg.hop_ms)},"
        f"sample_rate={sg.sample_rate},frames={sg.magnitudes.shape[0]},"
        f"bins={sg.magnitudes.shape[1]}"
    )
    lines = [header]
    for row in sg.magnitudes:
        lines.append(",".join(fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_ratings_csv(path, matrices):
    """Serialize RatingMatrix objects back to rater_id,item_id,attribute,score rows."""
    lines = ["rater_id,item_id,attribute,score"]
    for attr in sorted(matrices):
        m = matrices[attr]
        for r, rid in enumerate(m.rater_ids):
            for i, iid in enumerate(m.item_ids):
                v = m.values[r, i]
                if np.isfinite(v):
                    lines.append(f"{rid},{iid},{attr},{fmt(v)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_segment_posteriors_csv(path):
    """ad_id,(anything...),p_high[,p_low] rows -> ordered {ad_id: [p_high...]}."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {name.strip(): k for k, name in enumerate(header)}
        if "ad_id" not in cols or "p_high" not in cols:
            raise ValueError(f"{path}: need ad_id and p_high columns")
        out: dict[str, list[float]] = {}
        for row in reader:
            if not row:
                continue
            out.setdefault(row[cols["ad_id"]], []).append(float(row[cols["p_high"]]))
    return out


def write_predictions_csv(path, item_ids, truths, posteriors):
    """Out-of-fold or test predictions: item_id,truth,p_high,p_low."""
    posteriors = np.asarray(posteriors, dtype=float)
    lines = ["item_id,truth,p_high,p_low"]
    for iid, truth, (p_high, p_low) in zip(item_ids, truths, posteriors):
        lines.append(f"{iid},{truth.value},{fmt(p_high)},{fmt(p_low)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_predictions_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["item_id", "truth", "p_high", "p_low"]:
            raise ValueError(f"{path}: expected header item_id,truth,p_high,p_low")
        ids, truths, post = [], [], []
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            truths.append(AffectLabel.from_code(row[1]))
            post.append((float(row[2]), float(row[3])))
    return ids, truths, np.asarray(post, dtype=float)
