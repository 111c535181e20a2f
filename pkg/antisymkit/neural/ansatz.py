"""
Ansatz models for antisymmetric targets on ``n`` points in ``R^d``.

*   :class:`BiLipschitzModel` evaluates ``h(x) = (N(Ψ(x)) - N(Ψ(τ₀x))) / 2``
    where ``Ψ`` is the frozen :class:`~antisymkit.features.ProjectionEnsemble`
    feature map and ``τ₀`` is the transposition of the first two points.
*   :class:`VandermondeBaselineModel` evaluates ``Σ_k s_k(x) f_k(x)`` with the
    frozen Vandermonde features ``f_k`` and a DeepSets coefficient vector
    ``s = ρ(Σ_i φ(x_i))``.
*   :class:`PlainMLPModel` feeds the flattened points to a network and is
    not antisymmetric.

Every model splits its evaluation into :meth:`~AnsatzModel.features`, which
depends only on frozen parameters and can be cached, and
:meth:`~AnsatzModel.forward_features`, which runs the trainable networks.
"""
import numpy
import logging

from antisymkit.symmetry import Permutation
from antisymkit.features import (sample_ensemble, psi_features_batch, ProjectionEnsemble,
                                 sample_vandermonde_bank, vandermonde_features, VandermondeBank)
from .mlp import MLPParams, init_mlp, mlp_forward, mlp_backward

KINDS = ('bilipschitz', 'vandermonde', 'mlp')

class AnsatzModel(object):
    """
    Base class of the ansatz models.

    Attributes
    ----------
    nets : dict
        the trainable networks, by name, in parameter order
    attrs : dict
        the configuration of the model
    """
    kind = None
    net_names = ()
    logger = logging.getLogger('AnsatzModel')

    def __init__(self, n, d, seed, nets):
        self.n, self.d = int(n), int(d)
        self.seed = int(seed)
        self.nets = {name: nets[name] for name in self.net_names}
        self.attrs = {'kind': self.kind, 'n': self.n, 'd': self.d, 'seed': self.seed,
                      'activation': self.activation}
        for name, net in self.nets.items():
            self.attrs['%s_sizes' % name] = list(net.layer_sizes)

    @property
    def activation(self):
        return next(iter(self.nets.values())).activation

    @property
    def params(self):
        """ All trainable arrays, network by network. """
        toret = []
        for net in self.nets.values():
            toret += net.params
        return toret

    @property
    def param_count(self):
        return sum(net.param_count for net in self.nets.values())

    @property
    def frozen_seed(self):
        return 0

    def frozen_blocks(self):
        """ The frozen feature parameters as ``(name, array)`` pairs. """
        return []

    def _check_batch(self, X):
        X = numpy.asarray(X, dtype='f8')
        if X.ndim == 2 and X.shape == (self.n, self.d):
            X = X[None]
        elif X.ndim == 2 and self.d == 1 and X.shape[1] == self.n:
            X = X[..., None]
        if X.ndim != 3 or X.shape[1:] != (self.n, self.d):
            raise ValueError("%s expects point clouds of shape (%d, %d), got %s"
                             % (self.__class__.__name__, self.n, self.d, str(X.shape)))
        if not numpy.isfinite(X).all():
            raise ValueError("point clouds contain non-finite entries")
        return X

    def features(self, X):
        """ The frozen features of a ``(B, n, d)`` stack. """
        raise NotImplementedError

    def forward_features(self, X, F):
        """
        Predictions ``(B,)`` and a backward cache from the points ``X`` and
        their frozen features ``F``.
        """
        raise NotImplementedError

    def backward(self, cache, upstream):
        """
        Gradients of ``Σ upstream * prediction`` with respect to
        :attr:`params`.
        """
        raise NotImplementedError

    def forward(self, X):
        """ Predictions for a ``(B, n, d)`` stack, or a scalar for one cloud. """
        single = numpy.ndim(X) == 2 and numpy.shape(X) == (self.n, self.d)
        X = self._check_batch(X)
        pred, _ = self.forward_features(X, self.features(X))
        return float(pred[0]) if single else pred

    __call__ = forward

    def __repr__(self):
        return "%s(n=%d, d=%d, params=%d)" % (self.__class__.__name__, self.n, self.d, self.param_count)

class BiLipschitzModel(AnsatzModel):
    """
    ``h(x) = (N(Ψ(x)) - N(Ψ(τ₀x))) / 2``.

    Parameters
    ----------
    ensemble : ProjectionEnsemble
        the frozen parameters of ``Ψ``
    net : MLPParams
        the network ``N``, of input width ``ensemble.m`` and output width 1
    seed : int
        the model seed
    """
    kind = 'bilipschitz'
    net_names = ('net',)
    logger = logging.getLogger('BiLipschitzModel')

    def __init__(self, ensemble, net, seed=0):
        if net.input_width != ensemble.m or net.output_width != 1:
            raise ValueError("network %r does not map %d features to a scalar" % (net, ensemble.m))
        self.ensemble = ensemble
        self.tau0 = Permutation.transposition(ensemble.n, 0, 1)
        AnsatzModel.__init__(self, ensemble.n, ensemble.d, seed, {'net': net})
        self.attrs['m'] = ensemble.m

    @property
    def frozen_seed(self):
        return self.ensemble.seed

    def frozen_blocks(self):
        return [('a', self.ensemble.a), ('b', self.ensemble.b)]

    def features(self, X):
        X = self._check_batch(X)
        return numpy.stack([psi_features_batch(X, self.ensemble),
                            psi_features_batch(X[:, self.tau0.mapping], self.ensemble)], axis=1)

    def forward_features(self, X, F):
        B = len(F)
        y, cache = mlp_forward(self.nets['net'], numpy.concatenate([F[:, 0], F[:, 1]], axis=0))
        pred = 0.5 * (y[:B, 0] - y[B:, 0])
        return pred, {'net': cache}

    def backward(self, cache, upstream):
        u = 0.5 * numpy.asarray(upstream, dtype='f8')
        grads, _ = mlp_backward(self.nets['net'], cache['net'], numpy.concatenate([u, -u])[:, None])
        return grads

class VandermondeBaselineModel(AnsatzModel):
    """
    ``Σ_k s_k(x) f_k(x)`` with ``s = ρ(Σ_i φ(x_i))``.

    The sum over points is taken over the per-coordinate sorted values of
    ``φ(x_i)``, so ``s`` does not depend on the order of the points.

    Parameters
    ----------
    bank : VandermondeBank
        the frozen directions of the features ``f_k``
    phi : MLPParams
        the per-point encoder, of input width ``d``
    rho : MLPParams
        the aggregator, of output width ``bank.K``
    seed : int
        the model seed
    """
    kind = 'vandermonde'
    net_names = ('phi', 'rho')
    logger = logging.getLogger('VandermondeBaselineModel')

    def __init__(self, bank, phi, rho, seed=0):
        if phi.input_width != bank.d:
            raise ValueError("encoder %r does not take points in R^%d" % (phi, bank.d))
        if rho.input_width != phi.output_width or rho.output_width != bank.K:
            raise ValueError("aggregator %r must map width %d to K = %d" % (rho, phi.output_width, bank.K))
        self.bank = bank
        AnsatzModel.__init__(self, bank.n, bank.d, seed, {'phi': phi, 'rho': rho})
        self.attrs['K'] = bank.K

    @property
    def frozen_seed(self):
        return self.bank.seed

    def frozen_blocks(self):
        return [('y', self.bank.y)]

    def features(self, X):
        return vandermonde_features(self._check_batch(X), self.bank)

    def forward_features(self, X, F):
        B, n, d = X.shape
        phi, rho = self.nets['phi'], self.nets['rho']
        Phi, cphi = mlp_forward(phi, X.reshape(B * n, d))
        pooled = numpy.sort(Phi.reshape(B, n, -1), axis=1).sum(axis=1)
        s, crho = mlp_forward(rho, pooled)
        pred = (s * F).sum(axis=-1)
        if not numpy.isfinite(pred).all():
            raise FloatingPointError("non-finite Vandermonde baseline output")
        return pred, {'phi': cphi, 'rho': crho, 'F': F, 'shape': (B, n)}

    def backward(self, cache, upstream):
        u = numpy.asarray(upstream, dtype='f8')
        B, n = cache['shape']
        grads_rho, dpooled = mlp_backward(self.nets['rho'], cache['rho'], u[:, None] * cache['F'])
        dPhi = numpy.broadcast_to(dpooled[:, None, :], (B, n, dpooled.shape[-1])).reshape(B * n, -1)
        grads_phi, _ = mlp_backward(self.nets['phi'], cache['phi'], dPhi)
        return grads_phi + grads_rho

class PlainMLPModel(AnsatzModel):
    """
    A network on the flattened ``n * d`` coordinates.
    """
    kind = 'mlp'
    net_names = ('net',)
    logger = logging.getLogger('PlainMLPModel')

    def __init__(self, n, d, net, seed=0):
        if net.input_width != n * d or net.output_width != 1:
            raise ValueError("network %r does not map %d coordinates to a scalar" % (net, n * d))
        AnsatzModel.__init__(self, n, d, seed, {'net': net})

    def features(self, X):
        X = self._check_batch(X)
        return X.reshape(len(X), self.n * self.d)

    def forward_features(self, X, F):
        y, cache = mlp_forward(self.nets['net'], F)
        return y[:, 0], {'net': cache}

    def backward(self, cache, upstream):
        grads, _ = mlp_backward(self.nets['net'], cache['net'], numpy.asarray(upstream, dtype='f8')[:, None])
        return grads

def forward_h(model, x):
    """
    ``h(x)`` of a :class:`BiLipschitzModel` for one point cloud.
    """
    if not isinstance(model, BiLipschitzModel):
        raise TypeError("forward_h expects a BiLipschitzModel, not %s" % type(model).__name__)
    X = model._check_batch(x)
    if len(X) != 1:
        raise ValueError("forward_h evaluates a single point cloud")
    return float(model.forward(X)[0])

def forward_vandermonde_baseline(model, x):
    """
    ``Σ_k s_k(x) f_k(x)`` of a :class:`VandermondeBaselineModel` for one
    point cloud.
    """
    if not isinstance(model, VandermondeBaselineModel):
        raise TypeError("forward_vandermonde_baseline expects a VandermondeBaselineModel, not %s" % type(model).__name__)
    X = model._check_batch(x)
    if len(X) != 1:
        raise ValueError("forward_vandermonde_baseline evaluates a single point cloud")
    return float(model.forward(X)[0])

def build_model(kind, n, d, seed=0, activation='relu', **arch):
    """
    Construct an ansatz with its default architecture.

    The frozen feature parameters are drawn with ``seed``; the networks
    are initialized with ``seed + 1`` (and ``seed + 2`` for the second
    network of the Vandermonde baseline).

    Parameters
    ----------
    kind : {'bilipschitz', 'vandermonde', 'mlp'}
        the ansatz
    n, d : int
        the number of points and their dimension
    seed : int
        the model seed
    activation : {'relu', 'tanh'}
        the hidden activation of every network
    **arch :
        ``bilipschitz``: ``m`` (default ``2nd+1``), ``hidden`` (default
        ``(256, 256, 64)``); ``vandermonde``: ``K`` (default ``nd+1``),
        ``phi_sizes`` (default ``(128, 128)``), ``rho_hidden`` (default
        ``(128,)``); ``mlp``: ``hidden`` (default ``(256, 256, 64)``)
    """
    if kind not in KINDS:
        raise ValueError("ansatz should be one of %s, not '%s'" % (KINDS, kind))

    defaults = {
        'bilipschitz': {'m': None, 'hidden': (256, 256, 64)},
        'vandermonde': {'K': None, 'phi_sizes': (128, 128), 'rho_hidden': (128,)},
        'mlp': {'hidden': (256, 256, 64)},
    }[kind]
    unknown = set(arch) - set(defaults)
    if unknown:
        raise TypeError("unexpected architecture options for '%s': %s" % (kind, sorted(unknown)))
    opts = dict(defaults)
    opts.update({k: v for k, v in arch.items() if v is not None})

    if kind == 'bilipschitz':
        ensemble = sample_ensemble(n, d, m=opts['m'], seed=seed)
        net = init_mlp([ensemble.m] + list(opts['hidden']) + [1], activation, seed + 1)
        model = BiLipschitzModel(ensemble, net, seed=seed)
    elif kind == 'vandermonde':
        bank = sample_vandermonde_bank(n, d, K=opts['K'], seed=seed)
        phi_sizes = list(opts['phi_sizes'])
        phi = init_mlp([d] + phi_sizes, activation, seed + 1)
        rho = init_mlp([phi_sizes[-1]] + list(opts['rho_hidden']) + [bank.K], activation, seed + 2)
        model = VandermondeBaselineModel(bank, phi, rho, seed=seed)
    else:
        net = init_mlp([n * d] + list(opts['hidden']) + [1], activation, seed + 1)
        model = PlainMLPModel(n, d, net, seed=seed)

    model.logger.debug("built %r" % model)
    return model

def model_from_parts(kind, n, d, seed, nets, frozen, frozen_seed):
    """
    Reassemble a model from its networks and frozen arrays, as stored in a
    checkpoint.
    """
    if kind == 'bilipschitz':
        ensemble = ProjectionEnsemble(n, d, frozen['a'], frozen['b'], frozen_seed)
        return BiLipschitzModel(ensemble, nets['net'], seed=seed)
    elif kind == 'vandermonde':
        bank = VandermondeBank(n, d, frozen['y'], frozen_seed)
        return VandermondeBaselineModel(bank, nets['phi'], nets['rho'], seed=seed)
    elif kind == 'mlp':
        return PlainMLPModel(n, d, nets['net'], seed=seed)
    raise ValueError("unknown ansatz '%s'" % kind)

NET_NAMES = {'bilipschitz': BiLipschitzModel.net_names,
             'vandermonde': VandermondeBaselineModel.net_names,
             'mlp': PlainMLPModel.net_names}
FROZEN_NAMES = {'bilipschitz': ('a', 'b'), 'vandermonde': ('y',), 'mlp': ()}

__all__ = ['AnsatzModel', 'BiLipschitzModel', 'VandermondeBaselineModel', 'PlainMLPModel',
           'MLPParams', 'forward_h', 'forward_vandermonde_baseline', 'build_model', 'model_from_parts']
