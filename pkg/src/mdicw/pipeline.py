"""Counts table -> yield intervals -> certificates."""

from __future__ import annotations

from .certifier import DEFAULT_SEARCH, FeasibleRegion, SearchConfig, certify
from .decoy import (
    TEST_STATES,
    UNKNOWN_STATES,
    CountsRecord,
    IntensityConfig,
    YieldInterval,
    dark_count_interval,
    gaussian_interval,
    single_photon_bounds_decoy,
    single_photon_bounds_nondecoy,
)
from .errors import DataError
from .qubit import Z_BASIS, CoherenceBasis


def index_counts(records) -> dict[tuple[str, str], CountsRecord]:
    return {(r.state_label, r.intensity_class): r for r in records}


def vacuum_record(records) -> CountsRecord | None:
    """All vacuum rows pooled into one record; dark counts are a detector property."""
    vac = [r for r in records if r.intensity_class == "vacuum"]
    if not vac:
        return None
    return CountsRecord(vac[0].state_label, "vacuum", sum(r.sent for r in vac), sum(r.ones for r in vac))


def dark_count_from_records(records, n_sigma: float) -> float | None:
    """Upper endpoint of the vacuum click interval, or None without vacuum rows."""
    vac = vacuum_record(records)
    if vac is None or vac.sent == 0:
        return None
    return dark_count_interval(vac, n_sigma).hi


def unknown_states_present(records) -> list[str]:
    present = {r.state_label for r in records}
    return [s for s in UNKNOWN_STATES if s in present]


def yields_from_counts(
    records, cfg: IntensityConfig, n_sigma: float, method: str = "decoy", states=None
) -> dict[str, YieldInterval]:
    table = index_counts(records)
    if states is None:
        states = TEST_STATES + tuple(unknown_states_present(records))
    needed = ("signal", "decoy") if method == "decoy" else ("signal",)
    out = {}
    for state in states:
        missing = [c for c in needed if (state, c) not in table]
        if missing:
            raise DataError(f"counts table lacks {state} rows for {', '.join(missing)}")
        p_mu = gaussian_interval(table[state, "signal"], n_sigma)
        if method == "decoy":
            p_nu = gaussian_interval(table[state, "decoy"], n_sigma)
            out[state] = single_photon_bounds_decoy(p_mu, p_nu, cfg, state)
        elif method == "nondecoy":
            out[state] = single_photon_bounds_nondecoy(p_mu, cfg, state)
        else:
            raise ValueError(f"method must be 'decoy' or 'nondecoy', got {method!r}")
    return out


def certify_counts(
    records,
    cfg: IntensityConfig,
    n_sigma: float,
    basis: CoherenceBasis = Z_BASIS,
    search: SearchConfig = DEFAULT_SEARCH,
    method: str = "decoy",
):
    """One certificate per unknown-state label found in ``records``.

    Returns (certificates by label, yield intervals by label).
    """
    unknown = unknown_states_present(records)
    if not unknown:
        raise DataError(f"counts table has no unknown-state rows ({', '.join(UNKNOWN_STATES)})")
    yields = yields_from_counts(records, cfg, n_sigma, method)
    certs = {u: certify(FeasibleRegion.from_yields(yields, u), basis, search) for u in unknown}
    return certs, yields
