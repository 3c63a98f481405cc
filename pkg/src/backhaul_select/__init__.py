"""Backhaul link selection for a congested base station with a Double-DQN agent."""
from .agent import AgentConfig, DDQNAgent, evaluate, run_training
from .baselines import exhaustive_optimum, random_policy_reward, split_optimum
from .env import BackhaulEnv
from .net_model import build_default_topology, mdq_waiting_time, path_latency
from .scenario import Scenario, build_scenario
from .traffic import split_dataset

__all__ = [
    "AgentConfig", "BackhaulEnv", "DDQNAgent", "Scenario", "build_default_topology",
    "build_scenario", "evaluate", "exhaustive_optimum", "mdq_waiting_time", "path_latency",
    "random_policy_reward", "run_training", "split_dataset", "split_optimum",
]
__version__ = "0.1.0"
