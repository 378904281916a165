"""Ping-pong QKD with trusted amplitude-damping noise under the Wojcik attack."""

from .channels import (DampingParams, GadParams, KrausChannel, ad_kraus_mode, ad_kraus_qubit,
                       apply_channel, gad_kraus, jc_damping, nonmarkov_witness,
                       unitality_deviation)
from .classical_sim import (StochasticMap, algebraic_witness, feasibility_search,
                            local_postprocess, lp_residual_b_given_a)
from .info import (KeyRateReport, holevo_bound, key_rates, marginalize,
                   mutual_information)
from .protocol import (JointDistribution, ProtocolScenario, Variant, closed_form_joint,
                       measure_joint)

__all__ = [
    "DampingParams", "GadParams", "KrausChannel", "ad_kraus_mode", "ad_kraus_qubit",
    "apply_channel", "gad_kraus", "jc_damping", "nonmarkov_witness", "unitality_deviation",
    "StochasticMap", "algebraic_witness", "feasibility_search", "local_postprocess",
    "lp_residual_b_given_a", "KeyRateReport", "holevo_bound", "key_rates", "marginalize",
    "mutual_information", "JointDistribution", "ProtocolScenario", "Variant",
    "closed_form_joint", "measure_joint",
]
