from .pareto import dominates, pareto_filter
from .hypervolume import HypervolumeError, hypervolume
from .gp import GpModel, gp_fit, gp_predict
from .smsego import sms_ego_gain, sms_ego_score
from .space import Dimension, ParamSpace, ObjectiveVector, DesignPoint, evaluate
from .bayesopt import ParetoArchive, run_bayesopt, random_search

__all__ = [
    "dominates", "pareto_filter",
    "HypervolumeError", "hypervolume",
    "GpModel", "gp_fit", "gp_predict",
    "sms_ego_gain", "sms_ego_score",
    "Dimension", "ParamSpace", "ObjectiveVector", "DesignPoint", "evaluate",
    "ParetoArchive", "run_bayesopt", "random_search",
]
