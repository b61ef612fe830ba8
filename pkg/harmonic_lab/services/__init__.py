# Services module
from .balayage_service import BalayageService, complementarity_residual, extract_sweep_measure, occupancy
from .green_service import GreenEvaluator, green_disc, green_halfplane, green_numeric
from .grid_service import build_domain_mask, region_from_domain, region_from_field
