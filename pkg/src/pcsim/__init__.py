"""FDTD simulator and analysis toolkit for photonic-crystal cavity
spontaneous-emission control."""

__version__ = "0.1.0"

from .fdtd import (
    EnergyMonitor,
    FieldDftMonitor,
    FluxMonitor,
    MonitorRecords,
    PmlSpec,
    PointProbe,
    SimulationGrid,
    SnapshotMonitor,
    run,
    step,
)
from .geometry import (
    DefectSpec,
    HoleOverride,
    MaterialMap,
    PhotonicCrystalSpec,
    make_single_defect_cavity,
    rasterize,
    uniform_map,
)
from .sources import (
    ContinuousWave,
    DipoleSource,
    FluxSurface,
    GaussianPulse,
    Impulse,
    RadiatedPower,
    Spectrum,
    emission_spectrum,
    radiated_power,
)
from .modal import (
    DecayRate,
    EnhancementInput,
    ResonanceMode,
    ResonancePeak,
    cavity_decay_rate,
    collection_efficiency,
    extract_cavity_mode,
    find_resonances,
    mode_volume,
    mode_volume_normalized,
    purcell_factor,
    rate_enhancement,
    weak_coupling_check,
)
from .ensemble import (
    EmitterSpec,
    EnsembleResult,
    GapScanResult,
    RateMap,
    RateResult,
    SolverSettings,
    bandgap_scan,
    ensemble_rate_suppression,
    rate_map,
    sample_emitters,
    single_emitter_rate,
)
from .photon_stats import (
    CoincidenceHistogram,
    EmitterModel,
    G2Result,
    LifetimeFit,
    LorentzianFit,
    PhotonStreams,
    PulseTrain,
    fit_lifetime,
    fit_lorentzian,
    g2_zero,
    hbt_histogram,
    lifetime_ratio,
    simulate_photon_stream,
)
from .units import UnitSystem, cavity_linewidth
