"""Simulator of a time-multiplexed photonic C-NOT gate.

Subpackage map: ``circuit`` builds the path-picture interferometer,
``tmloop`` compiles it to fiber-loop switch schedules, ``fock`` evolves
multi-photon states, ``source`` models the pair source, ``budget``
reproduces the fidelity-bound analysis, ``tomo`` does two-qubit state
tomography, ``experiment`` ties the pipelines together and ``cli`` is the
command-line front end.
"""

from .circuit import (
    BeamsplitterSpec,
    Interferometer,
    U_CNOT,
    bs_unitary,
    dual_rail_map,
    postselected_submatrix,
    ralph_cnot,
    synthesize,
)
from .tmloop import (
    CompileOptions,
    LoopConfig,
    SwitchSchedule,
    compile_mesh,
    eom_unitary,
    equivalence_check,
    loop_unitary,
    theta_for_bs,
)
from .fock import (
    DetectorModel,
    PhotonEnsemble,
    detect,
    evolve,
    evolve_state,
    hom_coincidence,
    permanent,
    postselect,
)
from .source import TmsvModel, calibrate_lambda, tmsv_ensemble
from .budget import EfficiencyModel, budget_table, fidelity_bound, p_cnot
from .tomo import reconstruct, simulate_counts, state_fidelity
from .experiment import (
    Imperfections,
    gate_fidelity,
    pattern_fidelity,
    run_bell,
    run_truth_table,
)

__version__ = "0.1.0"
