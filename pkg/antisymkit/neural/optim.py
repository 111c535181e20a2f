import numpy
import logging

class AdamState(object):
    """
    First and second moment estimates of Adam for a list of parameter
    arrays, which :func:`adam_step` updates in place.

    Parameters
    ----------
    params : list of numpy.ndarray
        the parameters being optimized
    beta1, beta2, eps : float
        the Adam constants
    """
    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.m = [numpy.zeros_like(p) for p in self.params]
        self.v = [numpy.zeros_like(p) for p in self.params]
        self.t = 0
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

def adam_step(state, grads, lr):
    """
    One bias-corrected Adam update of ``state.params``.

    Returns
    -------
    list of numpy.ndarray :
        the updated parameters
    """
    if lr <= 0:
        raise ValueError("learning rate must be positive, not %g" % lr)
    if len(grads) != len(state.params):
        raise ValueError("got %d gradient blocks for %d parameter blocks" % (len(grads), len(state.params)))
    for i, (p, g) in enumerate(zip(state.params, grads)):
        if numpy.shape(g) != p.shape:
            raise ValueError("gradient block %d has shape %s, parameter has %s" % (i, str(numpy.shape(g)), str(p.shape)))

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1 - b1 ** state.t
    c2 = 1 - b2 ** state.t
    for p, g, m, v in zip(state.params, grads, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= lr * (m / c1) / (numpy.sqrt(v / c2) + state.eps)
    return state.params

class ReduceLROnPlateau(object):
    """
    Multiply the learning rate by ``factor`` once the validation loss has
    not strictly improved for more than ``patience`` epochs, never going
    below ``min_lr``.

    Parameters
    ----------
    lr : float
        the initial learning rate
    factor : float
        the reduction factor, ``0 < factor < 1``
    patience : int
        the number of epochs without improvement that are tolerated
    min_lr : float
        the lower bound of the learning rate
    """
    logger = logging.getLogger('ReduceLROnPlateau')

    def __init__(self, lr, factor=0.5, patience=5, min_lr=1e-5):
        if not lr > 0:
            raise ValueError("`lr` must be positive, not %g" % lr)
        if not 0 < factor < 1:
            raise ValueError("`factor` must be in (0, 1), not %g" % factor)
        if patience < 0:
            raise ValueError("`patience` must be non-negative, not %d" % patience)
        if min_lr < 0:
            raise ValueError("`min_lr` must be non-negative, not %g" % min_lr)

        self.lr = float(lr)
        self.factor = float(factor)
        self.patience = int(patience)
        self.min_lr = float(min_lr)
        self.best = numpy.inf
        self.bad_epochs = 0

    def step(self, val_loss):
        """
        Record one epoch's validation loss and return the learning rate for
        the next epoch.
        """
        if val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1

        if self.bad_epochs > self.patience:
            new_lr = max(self.lr * self.factor, self.min_lr)
            if new_lr < self.lr:
                self.logger.info("reducing learning rate from %.3e to %.3e" % (self.lr, new_lr))
            self.lr = new_lr
            self.bad_epochs = 0
        return self.lr
