from .adversarial import AaConfig, AdversaryHead, aa_training_mix, adversary_step, probe_code_readout, train_aa
from .augment import augment_da
from .consistency import ScConfig, kl_div, sc_loss, train_sc
from .dispatch import KINDS, InterventionConfig, InterventionContext, apply_intervention

__all__ = [
    "AaConfig",
    "AdversaryHead",
    "InterventionConfig",
    "InterventionContext",
    "KINDS",
    "ScConfig",
    "aa_training_mix",
    "adversary_step",
    "apply_intervention",
    "augment_da",
    "kl_div",
    "probe_code_readout",
    "sc_loss",
    "train_aa",
    "train_sc",
]
