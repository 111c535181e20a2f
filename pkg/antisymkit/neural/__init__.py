from .mlp import MLPParams, init_mlp, mlp_forward, mlp_backward, param_count
from .optim import AdamState, adam_step, ReduceLROnPlateau
from .ansatz import (AnsatzModel, BiLipschitzModel, VandermondeBaselineModel, PlainMLPModel,
                     forward_h, forward_vandermonde_baseline, build_model)
from .train import TrainConfig, TrainingLog, FeatureCache, DivergenceError, train, evaluate, predict
from .checkpoint import save_checkpoint, load_checkpoint
