"""Fault-counting evaluation of boolean formula trees.

Span programs for direct boolean functions, fault annotation of formula
trees, a hard input distribution with classical baselines, and the
quantum-walk picture of NAND trees.
"""

from .boolean_tree import (ComplexityParams, ComplexityReport, EvalTree, LeafOracle, TreeAnnotation,
                           TreeError, analysis_for, annotate, complexity_bound, eval_tree,
                           induction_bound, node_values, query_estimate, random_k_fault_tree,
                           validate_k_fault)
from .classical_solver import (SolveResult, run_benchmark, simulate_division_process,
                               solve_shortcircuit, solve_splitsearch)
from .hard_distribution import (DistributionError, GadgetDistribution, GadgetSearchError, HardDistSpec,
                                LazyTreeOracle, PosteriorTracker, default_gadgets, sample_hard_tree,
                                search_gadgets)
from .nand_walk import (RatioState, WalkError, WalkGraph, build_walk_graph, hamiltonian_spectrum,
                        propagate_first_order, propagate_ratios, verify_complexity_rules)
from .span_program import (DirectFunctionSpec, FunctionAnalysis, SpanProgram, SpanProgramError,
                           analyze, analyze_spec, build_program, normalize_trivial, sp_evaluate,
                           witness_size)

__version__ = "0.1.0"
