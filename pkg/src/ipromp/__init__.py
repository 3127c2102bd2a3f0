"""Interactive probabilistic movement primitives for picking fruit in clusters."""
from .basis import CubicRBF, GaussianBasis, build_basis_matrix, eval_cubic_rbf, eval_gaussian_basis
from .demos import DemoSet, Demonstration, generate_nominals, split_demoset
from .errors import (GeometryInfeasibleError, IProMPError, InvalidInputError, JamError,
                     NumericalError, ScheduleOverflowError, SingularConditioningError)
from .iplanner import (ConditioningSchedule, IProMPResult, build_schedule, generate,
                       pick_cycle, plan_movement)
from .promp import (CompositePrimitive, ProMPModel, Trajectory, TrajectoryDistribution, Waypoint,
                    compose, composite_marginal, condition, fit_weights, learn, learn_segments,
                    marginal, sample_trajectory)
from .scene import ClusterScene, Fruit, Stem, TableTopFrame, preset, radius_nearest_neighbours
from .sim import ContactMetric, GripperState, SimTrace, contact_metrics, replay, step
from .sip import PushDirective, PushPlan, get_dir, plan_pushes, stem_geometry, subset_opt

__version__ = "0.1.0"
