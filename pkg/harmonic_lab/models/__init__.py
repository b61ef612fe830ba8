# Models module
from .balayage_models import Atom, BalayageResult, BoundaryMeasure, DensityComponent, MeasureSpec
from .ball_models import BallResult, CheckItem, CheckReport
from .grid_models import (
    ComplexField,
    DomainKind,
    DomainMask,
    DomainSpec,
    GreenMode,
    GridSpec,
    NodeClass,
    Point,
    RegionMask,
    ScalarField,
)
from .scenario_models import (
    GridConfig,
    SandpileSettings,
    ScenarioConfig,
    ScenarioKind,
    SolverSettings,
    VerificationSettings,
)
from .twophase_models import InterfaceEdge, TwoPhaseResult
