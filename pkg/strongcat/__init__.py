"""
strongcat

Strong-field quantum optics in Python: SFA dipoles and harmonic mode shifts, conditioning of the
driving field on HHG or ATI, optical cat states and their entanglement, homodyne tomography and a
quantum-spectrometer shot simulator.
"""

__version__ = "0.1.0"

from .config import RunConfig, load_config, resolve_threads
from .errors import (
    StrongCatError,
    ConfigurationError,
    ValidationError,
    MissingInputError,
    NumericalError,
)
from .schemas import (
    CoherentAmplitude,
    FockVector,
    SqueezeParams,
    CoherentSuperposition,
    GridSpec,
    WignerGrid,
    DensityMatrix,
    LaserPulse,
    AtomSpec,
    DipoleSeries,
    HarmonicShiftSet,
    EntangledMultimodeState,
    ElectronTag,
    LightMatterState,
    HomodyneTrace,
    ReconstructionReport,
    ShotTable,
    QsModel,
)
from .sfa import SFAEngine
from .ati import AtiSynthesizer
from .tomography import HomodyneTomographer
from .spectrometer import QuantumSpectrometer
from .commands import run_command

__all__ = [
    "__version__",
    # Configuration
    "RunConfig",
    "load_config",
    "resolve_threads",
    # Errors
    "StrongCatError",
    "ConfigurationError",
    "ValidationError",
    "MissingInputError",
    "NumericalError",
    # Schemas
    "CoherentAmplitude",
    "FockVector",
    "SqueezeParams",
    "CoherentSuperposition",
    "GridSpec",
    "WignerGrid",
    "DensityMatrix",
    "LaserPulse",
    "AtomSpec",
    "DipoleSeries",
    "HarmonicShiftSet",
    "EntangledMultimodeState",
    "ElectronTag",
    "LightMatterState",
    "HomodyneTrace",
    "ReconstructionReport",
    "ShotTable",
    "QsModel",
    # Engines
    "SFAEngine",
    "AtiSynthesizer",
    "HomodyneTomographer",
    "QuantumSpectrometer",
    # Commands
    "run_command",
]
