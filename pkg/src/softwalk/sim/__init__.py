from .engine import ContactRecord, RunResult, Simulator, summarize
from .noise import NoiseConfig, NoiseStream, noisy_wrench
from .references import ReferenceGenerator
from .scenario import Scenario, apply_overrides, load_scenario, scenario_from_texts
from .terrain import TerrainMap, TerrainSegment
