"""Loss terms of both SEDEG stages."""

from .classification import (
    loss_aux, loss_bc, loss_div, sigmoid_bce, divergence_targets,
    counts_vector, one_hot_targets, class_count_dict
)
from .distillation import loss_kd, loss_ted, loss_bld, loss_fd, per_class_weights
from .composition import (
    LossConfig, Stage1Parts, Stage2Parts,
    stage1_loss, stage1_terms, stage2_loss, stage2_terms
)

__all__ = [
    'loss_aux', 'loss_bc', 'loss_div', 'sigmoid_bce', 'divergence_targets',
    'counts_vector', 'one_hot_targets', 'class_count_dict',
    'loss_kd', 'loss_ted', 'loss_bld', 'loss_fd', 'per_class_weights',
    'LossConfig', 'Stage1Parts', 'Stage2Parts',
    'stage1_loss', 'stage1_terms', 'stage2_loss', 'stage2_terms'
]
