"""Five-link channel realisations for the RIS-assisted wiretap link."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError

LINKS = ("ab", "ar", "rb", "ae", "re")


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(w: float) -> float:
    return 10.0 * np.log10(w) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class Geometry:
    """Node positions in metres."""

    pos_alice: tuple = (0.0, 5.0, 10.0)
    pos_ris: tuple = (100.0, 0.0, 2.0)
    pos_bob: tuple = (100.0, 3.0, 0.0)
    pos_eve: tuple = (90.0, 2.0, 0.0)

    def __post_init__(self):
        for name in ("pos_alice", "pos_ris", "pos_bob", "pos_eve"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != 3:
                raise DomainError(f"{name} must be a 3-vector")
            object.__setattr__(self, name, v)
        pts = [np.array(getattr(self, n)) for n in ("pos_alice", "pos_ris", "pos_bob", "pos_eve")]
        for i in range(4):
            for j in range(i + 1, 4):
                if np.linalg.norm(pts[i] - pts[j]) <= 0:
                    raise DomainError("node positions must be pairwise distinct")

    def distance(self, link: str) -> float:
        ends = {
            "ab": (self.pos_alice, self.pos_bob),
            "ar": (self.pos_alice, self.pos_ris),
            "rb": (self.pos_ris, self.pos_bob),
            "ae": (self.pos_alice, self.pos_eve),
            "re": (self.pos_ris, self.pos_eve),
        }[link]
        return float(np.linalg.norm(np.subtract(ends[0], ends[1])))


@dataclass(frozen=True)
class PathLossModel:
    rho0_db: float = -30.0
    d0: float = 1.0
    gamma: dict = field(default_factory=lambda: {"ar": 2.2, "rb": 2.5, "re": 2.5, "ab": 3.5, "ae": 3.5})

    def __post_init__(self):
        if self.d0 <= 0:
            raise DomainError("reference distance d0 must be positive")
        if set(self.gamma) != set(LINKS):
            raise DomainError(f"path-loss exponents needed for links {LINKS}")
        if any(g < 2 for g in self.gamma.values()):
            raise DomainError("path-loss exponents must be >= 2")


@dataclass(frozen=True)
class SystemConfig:
    N_a: int = 4
    N_b: int = 4
    N_e: int = 4
    N_s: int = 4
    M: int = 50
    P: float = 1.0
    sigma2_b: float = 1e-14
    sigma2_e: float = 1e-14
    seed: int = 0

    def __post_init__(self):
        for name in ("N_a", "N_b", "N_e", "N_s", "M"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.N_s > min(self.N_a, self.N_b):
            raise DomainError("N_s must not exceed min(N_a, N_b)")
        if not (self.P > 0 and self.sigma2_b > 0 and self.sigma2_e > 0):
            raise DomainError("P and noise powers must be positive")


@dataclass(frozen=True)
class ChannelSet:
    """Linear-scale channel matrices, path loss included."""

    H_ab: np.ndarray
    H_ar: np.ndarray
    H_rb: np.ndarray
    H_ae: np.ndarray
    H_re: np.ndarray

    def __post_init__(self):
        N_b, N_a = self.H_ab.shape
        M = self.H_ar.shape[0]
        N_e = self.H_ae.shape[0]
        expected = {
            "H_ar": (M, N_a),
            "H_rb": (N_b, M),
            "H_ae": (N_e, N_a),
            "H_re": (N_e, M),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DomainError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def dims(self):
        """``(N_a, N_b, N_e, M)``."""
        return self.H_ab.shape[1], self.H_ab.shape[0], self.H_ae.shape[0], self.H_ar.shape[0]

    def matrices(self):
        return {f"H_{k}": getattr(self, f"H_{k}") for k in LINKS}


def path_loss(d: float, gamma: float, plm: PathLossModel) -> float:
    """Large-scale power gain at distance ``d`` metres."""
    if not d > 0:
        raise DomainError(f"distance must be positive, got {d}")
    return db_to_linear(plm.rho0_db) * (d / plm.d0) ** (-gamma)


def stream(seed: int, *purpose) -> np.random.Generator:
    """Independent generator for ``(seed, purpose...)``.

    Purposes are hashed into the spawn key, so a stream depends only on
    its name and never on how many other streams were drawn before it.
    """
    key = []
    for p in purpose:
        if isinstance(p, (int, np.integer)):
            key.append(int(p) & 0xFFFFFFFF)
        else:
            digest = hashlib.sha256(str(p).encode()).digest()
            key.append(int.from_bytes(digest[:4], "little"))
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def _cn(rng, shape):
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def generate_channels(cfg: SystemConfig, geo: Geometry, plm: PathLossModel) -> ChannelSet:
    """Draw one Rayleigh-faded realisation scaled by distance path loss.

    Each link uses its own named stream. Matrices touching the RIS are
    drawn with the element index leading and then transposed where
    needed, so the channels for ``M`` elements are exactly the first ``M``
    elements of any larger draw with the same seed.
    """
    shapes = {
        "ab": (cfg.N_b, cfg.N_a),
        "ar": (cfg.M, cfg.N_a),
        "rb": (cfg.M, cfg.N_b),
        "ae": (cfg.N_e, cfg.N_a),
        "re": (cfg.M, cfg.N_e),
    }
    mats = {}
    for link in LINKS:
        rng = stream(cfg.seed, "channel", link)
        H = _cn(rng, shapes[link]) * np.sqrt(path_loss(geo.distance(link), plm.gamma[link], plm))
        if link in ("rb", "re"):
            H = np.ascontiguousarray(H.T)
        H.setflags(write=False)
        mats[f"H_{link}"] = H
    return ChannelSet(**mats)


def effective_channels(ch: ChannelSet, phi):
    """Direct plus RIS-cascaded channels to Bob and Eve."""
    phi = np.asarray(phi)
    if phi.shape != (ch.H_ar.shape[0],):
        raise DomainError(f"phi has shape {phi.shape}, expected ({ch.H_ar.shape[0]},)")
    scaled = phi[:, None] * ch.H_ar
    return ch.H_ab + ch.H_rb @ scaled, ch.H_ae + ch.H_re @ scaled


def dump_channels_csv(ch: ChannelSet, path) -> None:
    """Write every matrix as ``# name rows cols`` followed by rows of interleaved re/im."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for name, H in ch.matrices().items():
            fh.write(f"# {name} {H.shape[0]} {H.shape[1]}\n")
            for row in H:
                inter = np.empty(2 * row.size)
                inter[0::2], inter[1::2] = row.real, row.imag
                w.writerow([repr(float(x)) for x in inter])


def load_channels_csv(path) -> ChannelSet:
    mats = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    i = 0
    while i < len(lines):
        _, name, r, c = lines[i].split()
        r, c = int(r), int(c)
        rows = [np.array([float(x) for x in lines[i + 1 + k].split(",")]) for k in range(r)]
        data = np.array(rows).reshape(r, 2 * c)
        mats[name] = data[:, 0::2] + 1j * data[:, 1::2]
        i += 1 + r
    return ChannelSet(**mats)
