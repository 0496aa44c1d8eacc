"""CSI-anchored token assignment and collision bookkeeping.

Each device's known channel vector is matched against the detected
per-token CSI rows: the closest detected token within the distance
threshold is written into the device's estimated sequence, otherwise the
slot is masked.  Tokens left unassigned form per-slot residual sets;
singleton residuals resolve their slot's masks directly, larger ones
become the candidate sets a predictor chooses from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .detector import DetectionResult

__all__ = ["MASK", "AssignmentState", "initial_assignment", "fine_grained_update"]

# Sentinel for an unresolved slot in an estimated sequence (token ids are >= 0).
MASK = -1


@dataclass
class AssignmentState:
    """Per-device estimated sequences plus per-slot residual/candidate sets.

    ``sequences`` is (K, N) int64 with MASK at unresolved slots.
    ``residual_sets[n]`` holds the detected tokens of slot n not consumed by
    the initial assignment, sorted ascending.  ``candidate_sets`` maps
    (device, slot) to the candidate token array for each remaining mask and
    is populated by :func:`fine_grained_update`.
    """

    sequences: np.ndarray
    residual_sets: list
    q: int
    candidate_sets: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.sequences.shape[0]

    @property
    def n_slots(self) -> int:
        return self.sequences.shape[1]

    def mask_count(self) -> int:
        return int(np.count_nonzero(self.sequences == MASK))

    def mask_rate(self) -> float:
        return self.mask_count() / self.sequences.size


def initial_assignment(detections: Sequence[DetectionResult], known_csi: np.ndarray,
                       threshold: float) -> AssignmentState:
    """Assign each detected token to the device whose channel it matches.

    For every device k and slot n the candidate is the detected token
    minimizing ||h_k - h_{phi,n}||; it is assigned iff the squared distance
    normalized by M is strictly below the threshold, else the slot is
    masked.  The argmin ranges over the full detected set, so the outcome
    is independent of device order; assigned tokens are removed from the
    slot's residual set.  Ties in the argmin resolve to the smallest token
    id.  An empty detected set masks the slot for every device.
    """
    known_csi = np.asarray(known_csi, dtype=np.complex128)
    if known_csi.ndim != 2:
        raise ValueError("known_csi must be (K, M)")
    k, m = known_csi.shape
    n_slots = len(detections)
    if n_slots == 0:
        raise ValueError("need at least one slot detection")
    q = detections[0].q
    sequences = np.full((k, n_slots), MASK, dtype=np.int64)
    residual_sets = []
    for n, det in enumerate(detections):
        if det.csi.size and det.csi.shape[1] != m:
            raise ValueError(f"slot {n}: CSI has {det.csi.shape[1]} antennas, expected {m}")
        if det.tokens.size == 0:
            residual_sets.append(np.empty(0, dtype=np.int64))
            continue
        diff = known_csi[:, None, :] - det.csi[None, :, :]
        d2 = (diff.real**2 + diff.imag**2).sum(axis=2)  # (K, |P_n|)
        best = d2.argmin(axis=1)  # first minimum = smallest token id (tokens sorted)
        ok = d2[np.arange(k), best] / m < threshold
        sequences[ok, n] = det.tokens[best[ok]]
        assigned = np.unique(det.tokens[best[ok]])
        residual_sets.append(np.setdiff1d(det.tokens, assigned))
    return AssignmentState(sequences=sequences, residual_sets=residual_sets, q=q)


def fine_grained_update(state: AssignmentState) -> AssignmentState:
    """Resolve collision slots whose residual set is a singleton.

    Per slot: an empty residual set changes nothing (masks there fall back
    to the full codebook as candidates); a singleton residual token is
    written into every mask at that slot and the set is emptied; a larger
    residual set becomes the candidate set of every mask at that slot.
    Returns a new state; the input is left untouched.
    """
    sequences = state.sequences.copy()
    residual_sets = []
    candidate_sets: dict = {}
    full_codebook = None
    for n, residual in enumerate(state.residual_sets):
        masked = np.flatnonzero(sequences[:, n] == MASK)
        if residual.size == 1:
            sequences[masked, n] = residual[0]
            residual_sets.append(np.empty(0, dtype=np.int64))
            continue
        residual_sets.append(residual.copy())
        if masked.size == 0:
            continue
        if residual.size == 0:
            # Missed detection: the predictor degrades to the full codebook.
            if full_codebook is None:
                full_codebook = np.arange(state.q, dtype=np.int64)
            for dev in masked:
                candidate_sets[(int(dev), n)] = full_codebook
        else:
            for dev in masked:
                candidate_sets[(int(dev), n)] = residual
    return AssignmentState(sequences=sequences, residual_sets=residual_sets,
                           q=state.q, candidate_sets=candidate_sets)
