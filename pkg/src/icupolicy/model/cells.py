"""Recurrent cells with backpropagation through time.

Each cell runs a whole (T, N, in) input sequence and keeps what its
backward pass needs.  The recurrent mask multiplies h(t-1) wherever it feeds
a weight matrix and is constant over time.

LSTM gate layout along the 4H axis is i, f, g, o.
GRU gate layout along the 3H axis is r (reset), u (update), n (candidate).
"""

import numpy
from scipy.special import expit

__all__ = [
    'CELLS',
    'gate_count',
    'lstm_forward',
    'lstm_backward',
    'gru_forward',
    'gru_backward',
]


def gate_count(cell_type):
    return {'LSTM':4, 'GRU':3}[cell_type]


def lstm_forward(inp, W, U, b, rmask=None):
    """
    :param inp: (T, N, in)
    :param W: (in, 4H)
    :param U: (H, 4H)
    :param b: (4H,)
    :param rmask: (N, H) or None
    :returns: (hs (T, N, H), cache)
    """
    T, N, _I = inp.shape
    H = U.shape[0]
    dtype = inp.dtype
    hs = numpy.zeros((T, N, H), dtype=dtype)
    cs = numpy.zeros((T, N, H), dtype=dtype)
    hms = numpy.zeros((T, N, H), dtype=dtype)
    gates = numpy.zeros((T, N, 4*H), dtype=dtype)

    # input projection of every step at once
    XW = inp.reshape(T*N, -1).dot(W).reshape(T, N, 4*H) + b

    h = numpy.zeros((N, H), dtype=dtype)
    c = numpy.zeros((N, H), dtype=dtype)
    for t in range(T):
        hm = h if rmask is None else h*rmask
        z = XW[t] + hm.dot(U)
        G = gates[t]
        G[:,:2*H] = expit(z[:,:2*H])
        G[:,2*H:3*H] = numpy.tanh(z[:,2*H:3*H])
        G[:,3*H:] = expit(z[:,3*H:])
        i, f, g, o = G[:,:H], G[:,H:2*H], G[:,2*H:3*H], G[:,3*H:]
        c = f*c + i*g
        h = o*numpy.tanh(c)
        hms[t], cs[t], hs[t] = hm, c, h

    return hs, (inp, W, U, rmask, hms, cs, gates)


def lstm_backward(dhs, cache):
    """
    :param dhs: (T, N, H) loss gradient w.r.t. each step's output h(t)
    :returns: (dinp, dW, dU, db)
    """
    inp, W, U, rmask, hms, cs, gates = cache
    T, N, H = dhs.shape
    dZ = numpy.zeros_like(gates)

    dh_next = numpy.zeros((N, H), dtype=dhs.dtype)
    dc_next = numpy.zeros((N, H), dtype=dhs.dtype)
    for t in range(T-1, -1, -1):
        G = gates[t]
        i, f, g, o = G[:,:H], G[:,H:2*H], G[:,2*H:3*H], G[:,3*H:]
        c_prev = cs[t-1] if t>0 else numpy.zeros_like(cs[0])
        tc = numpy.tanh(cs[t])

        dh = dhs[t] + dh_next
        dc = dc_next + dh*o*(1.0-tc*tc)

        dz = dZ[t]
        dz[:,:H] = dc*g*i*(1.0-i)
        dz[:,H:2*H] = dc*c_prev*f*(1.0-f)
        dz[:,2*H:3*H] = dc*i*(1.0-g*g)
        dz[:,3*H:] = dh*tc*o*(1.0-o)

        dc_next = dc*f
        dhm = dz.dot(U.T)
        dh_next = dhm if rmask is None else dhm*rmask

    dZf = dZ.reshape(T*N, 4*H)
    dW = inp.reshape(T*N, -1).T.dot(dZf)
    dU = hms.reshape(T*N, H).T.dot(dZf)
    db = dZf.sum(axis=0)
    dinp = dZf.dot(W.T).reshape(inp.shape)
    return dinp, dW, dU, db


def gru_forward(inp, W, U, b, rmask=None):
    """
    :param inp: (T, N, in)
    :param W: (in, 3H)
    :param U: (H, 3H)
    :param b: (3H,)
    :param rmask: (N, H) or None
    :returns: (hs (T, N, H), cache)
    """
    T, N, _I = inp.shape
    H = U.shape[0]
    dtype = inp.dtype
    hs = numpy.zeros((T, N, H), dtype=dtype)
    hms = numpy.zeros((T, N, H), dtype=dtype)
    gates = numpy.zeros((T, N, 3*H), dtype=dtype)
    HUn = numpy.zeros((T, N, H), dtype=dtype)

    XW = inp.reshape(T*N, -1).dot(W).reshape(T, N, 3*H) + b

    h = numpy.zeros((N, H), dtype=dtype)
    for t in range(T):
        hm = h if rmask is None else h*rmask
        hu = hm.dot(U)
        G = gates[t]
        G[:,:2*H] = expit(XW[t,:,:2*H] + hu[:,:2*H])
        r, u = G[:,:H], G[:,H:2*H]
        HUn[t] = hu[:,2*H:]
        G[:,2*H:] = numpy.tanh(XW[t,:,2*H:] + r*HUn[t])
        n = G[:,2*H:]
        h = u*h + (1.0-u)*n
        hms[t], hs[t] = hm, h

    return hs, (inp, W, U, rmask, hms, hs, gates, HUn)


def gru_backward(dhs, cache):
    """
    :param dhs: (T, N, H) loss gradient w.r.t. each step's output h(t)
    :returns: (dinp, dW, dU, db)
    """
    inp, W, U, rmask, hms, hs, gates, HUn = cache
    T, N, H = dhs.shape
    dZX = numpy.zeros_like(gates)
    dZH = numpy.zeros_like(gates)

    dh_next = numpy.zeros((N, H), dtype=dhs.dtype)
    for t in range(T-1, -1, -1):
        G = gates[t]
        r, u, n = G[:,:H], G[:,H:2*H], G[:,2*H:]
        h_prev = hs[t-1] if t>0 else numpy.zeros_like(hs[0])

        dh = dhs[t] + dh_next
        dan = dh*(1.0-u)*(1.0-n*n)
        dar = dan*HUn[t]*r*(1.0-r)
        dau = dh*(h_prev-n)*u*(1.0-u)

        dzx, dzh = dZX[t], dZH[t]
        dzx[:,:H] = dar
        dzx[:,H:2*H] = dau
        dzx[:,2*H:] = dan
        dzh[:,:2*H] = dzx[:,:2*H]
        dzh[:,2*H:] = dan*r

        dhm = dzh.dot(U.T)
        dh_next = dh*u + (dhm if rmask is None else dhm*rmask)

    dZXf = dZX.reshape(T*N, 3*H)
    dZHf = dZH.reshape(T*N, 3*H)
    dW = inp.reshape(T*N, -1).T.dot(dZXf)
    dU = hms.reshape(T*N, H).T.dot(dZHf)
    db = dZXf.sum(axis=0)
    dinp = dZXf.dot(W.T).reshape(inp.shape)
    return dinp, dW, dU, db


CELLS = {
    'LSTM': (lstm_forward, lstm_backward),
    'GRU': (gru_forward, gru_backward),
}
