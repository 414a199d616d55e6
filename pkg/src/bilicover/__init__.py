"""Lifted bilinear cover cuts for separable bilinear programs."""

from .cover import (
    CoverPartition,
    InvalidPartition,
    InvalidReason,
    Label,
    MTCut,
    eval_seed_lhs,
    mt_cut,
    mt_cut_lhs,
    partition_failure,
    seed_coefficient,
    validate_partition,
)
from .lift import LiftedCut, build_cut, eval_cut_lhs, format_cut, supergradient
from .model import (
    BilinearInstance,
    BilinearRow,
    InstanceFormatError,
    PointXY,
    SignMode,
    evaluate_row,
    generate_instance,
    parse_instance,
    read_instance,
    write_instance,
)
from .oracle import GlobalStatus, sample_feasible, solve_global
from .relax import (
    RelaxationState,
    add_cut,
    add_cut_linearization,
    build_mccormick,
    refine_until_cut_feasible,
    solve,
)
from .rootloop import LoopConfig, compute_metrics, run_mt_root, run_root
from .sdpcert import build_wstar, certify_psd, jacobi_eigenvalues, verify_sdp_equals_mccormick
from .separate import SeparationConfig, separate_all, separate_row

__version__ = "0.1.0"
