# Agents module
from .scenario_agent import ScenarioAgent, ScenarioState
