"""swirllab: lifted 5D analysis laboratory for axisymmetric flows with swirl."""

from .biotsavart import (LiftedVelocity, lift_and_project,
                         lifted_velocity_from_g, stream_solve,
                         velocity_block_bound, velocity_from_phi)
from .extraction import (DeltaReport, ScoreScan, delta_sup, recenter,
                         ring_capture_fraction, score, sup_scan)
from .fields import (ScalarFieldRZ, VelocityRZ, integrate_mu5,
                     lifted_l2_norm_sq)
from .grid import AxisBall, HalfPlaneGrid, get_grid
from .packets import (BRANCHES, ClassifyParams, Packet, WindowCover, classify,
                      coherence_test, detect_packets, window_cover)
from .paraproduct import (ParaproductReport, audit_bound,
                          decompose_nonlinearity, psi_factors, schur_sum,
                          starvation_monitor)
from .solver import FlowState, SolverConfig, initial_data, run, step
from .spectral import (DyadicDecomposition, DyadicPartition, SpectralField,
                       decompose, forward_transform, frequency_overlap_check,
                       gradient5, inverse_transform, low_pass, shell_project,
                       square_function_sum)
from .swrlio import read_fields, write_fields

__version__ = "0.1.0"
