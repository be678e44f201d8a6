"""Uniform spanning trees of K_n look locally like T_1 as n grows.

For each n we sample spanning trees, read off the radius-2 ball at every
root, and compare the empirical ball law with the exact limit.
"""
import warnings

from detlocal.experiments import convergence_experiment
from detlocal.incidence import RankDropWarning

warnings.simplefilter("ignore", RankDropWarning)

rep = convergence_experiment("ust", {}, [20, 80, 320], k=1, radius=2, samples=60,
                             roots=None, seed=11)
print(rep.summary_csv())

# the same statistic on 2-dimensional Kalai complexes against T_2
rep = convergence_experiment("kalai", {"k": 2}, [8, 12, 16], k=2, radius=2, samples=300,
                             roots=None, seed=12)
print(rep.summary_csv())
