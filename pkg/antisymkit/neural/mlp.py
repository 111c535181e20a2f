import numpy
import logging

logger = logging.getLogger('mlp')

ACTIVATIONS = ('relu', 'tanh')

def _activate(z, activation):
    if activation == 'relu':
        return numpy.maximum(z, 0)
    return numpy.tanh(z)

def _activate_backward(z, a, err, activation):
    # relu uses the subgradient 0 at the kink
    if activation == 'relu':
        return (z > 0) * err
    return (1 - a * a) * err

class MLPParams(object):
    """
    The weights and biases of a feed-forward network.

    Hidden layers apply ``activation``; the last layer is affine.

    Parameters
    ----------
    layer_sizes : list of int
        the widths from the input to the output layer
    weights : list of array_like
        ``weights[l]`` has shape ``(layer_sizes[l], layer_sizes[l+1])``
    biases : list of array_like
        ``biases[l]`` has shape ``(layer_sizes[l+1],)``
    activation : {'relu', 'tanh'}
        the hidden activation
    """
    def __init__(self, layer_sizes, weights, biases, activation='relu'):
        layer_sizes = [int(s) for s in layer_sizes]
        if len(layer_sizes) < 2 or min(layer_sizes) < 1:
            raise ValueError("`layer_sizes` needs at least two positive widths, not %s" % layer_sizes)
        if activation not in ACTIVATIONS:
            raise ValueError("`activation` should be one of %s, not '%s'" % (ACTIVATIONS, activation))
        if len(weights) != len(layer_sizes) - 1 or len(biases) != len(layer_sizes) - 1:
            raise ValueError("expected %d weight and bias blocks" % (len(layer_sizes) - 1))

        self.weights = []
        self.biases = []
        for l, (W, b) in enumerate(zip(weights, biases)):
            W = numpy.array(W, dtype='f8')
            b = numpy.array(b, dtype='f8')
            shape = (layer_sizes[l], layer_sizes[l+1])
            if W.shape != shape:
                raise ValueError("weights[%d] must have shape %s, not %s" % (l, str(shape), str(W.shape)))
            if b.shape != shape[1:]:
                raise ValueError("biases[%d] must have shape %s, not %s" % (l, str(shape[1:]), str(b.shape)))
            self.weights.append(W)
            self.biases.append(b)

        self.layer_sizes = layer_sizes
        self.activation = activation

    @property
    def input_width(self):
        return self.layer_sizes[0]

    @property
    def output_width(self):
        return self.layer_sizes[-1]

    @property
    def params(self):
        """ The parameter arrays in the order ``W0, b0, W1, b1, ...``. """
        toret = []
        for W, b in zip(self.weights, self.biases):
            toret += [W, b]
        return toret

    @property
    def param_count(self):
        return sum(p.size for p in self.params)

    def copy(self):
        return MLPParams(self.layer_sizes, self.weights, self.biases, self.activation)

    def __repr__(self):
        return "MLPParams(%s, activation='%s')" % (self.layer_sizes, self.activation)

def init_mlp(layer_sizes, activation='relu', seed=0):
    """
    A network with Glorot-uniform weights and zero biases.
    """
    layer_sizes = [int(s) for s in layer_sizes]
    if len(layer_sizes) < 2 or min(layer_sizes) < 1:
        raise ValueError("`layer_sizes` needs at least two positive widths, not %s" % layer_sizes)
    rng = numpy.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = numpy.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(numpy.zeros(fan_out))
    return MLPParams(layer_sizes, weights, biases, activation)

def mlp_forward(net, v):
    """
    Evaluate ``net`` on the rows of ``v``.

    Parameters
    ----------
    net : MLPParams
        the network
    v : array_like
        inputs of shape ``(..., input_width)``

    Returns
    -------
    y : numpy.ndarray
        outputs of shape ``(..., output_width)``
    cache : dict
        the layer inputs and pre-activations needed by :func:`mlp_backward`

    Raises
    ------
    FloatingPointError :
        if some layer produces a non-finite value
    """
    v = numpy.asarray(v, dtype='f8')
    if v.shape[-1:] != (net.input_width,):
        raise ValueError("input width %s does not match the network input width %d" % (str(v.shape[-1:]), net.input_width))

    lead = v.shape[:-1]
    a = v.reshape(-1, net.input_width)
    inputs, pre = [], []
    last = len(net.weights) - 1
    for l, (W, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(a)
        z = a.dot(W) + b
        pre.append(z)
        a = z if l == last else _activate(z, net.activation)
        if not numpy.isfinite(a).all():
            raise FloatingPointError("non-finite values in layer %d of %r" % (l, net))

    cache = {'inputs': inputs, 'pre': pre, 'output': a, 'lead': lead}
    return a.reshape(lead + (net.output_width,)), cache

def mlp_backward(net, cache, upstream):
    """
    Reverse-mode gradients of ``Σ upstream * y`` for the forward pass that
    produced ``cache``.

    Parameters
    ----------
    net : MLPParams
        the network used in the forward pass
    cache : dict
        the cache returned by :func:`mlp_forward`
    upstream : array_like
        the gradient with respect to the outputs, broadcastable to their shape

    Returns
    -------
    grads : list of numpy.ndarray
        gradients in the order of :attr:`MLPParams.params`
    grad_input : numpy.ndarray
        the gradient with respect to the inputs
    """
    if cache is None or 'inputs' not in cache:
        raise ValueError("mlp_backward needs the cache of a forward pass")

    lead = cache['lead']
    out = cache['output']
    err = numpy.broadcast_to(numpy.asarray(upstream, dtype='f8'),
                             lead + (net.output_width,)).reshape(out.shape)

    grads = [None] * (2 * len(net.weights))
    last = len(net.weights) - 1
    for l in range(last, -1, -1):
        z = cache['pre'][l]
        if l != last:
            a = cache['inputs'][l + 1]
            err = _activate_backward(z, a, err, net.activation)
        grads[2 * l] = cache['inputs'][l].T.dot(err)
        grads[2 * l + 1] = err.sum(axis=0)
        err = err.dot(net.weights[l].T)

    return grads, err.reshape(lead + (net.input_width,))

def param_count(model):
    """
    The number of trainable scalars of a network or an ansatz model;
    frozen feature parameters are not counted.
    """
    if isinstance(model, MLPParams):
        return model.param_count
    return sum(net.param_count for net in model.nets.values())
