"""Independent reference implementations used only to cross-check the package.

Everything here is deliberately written as plain scalar loops with its own
branch structure so it shares no code path with the implementations it
verifies.
"""

import math

import numpy as np


def resimulate(initial_cash, actions, prices, tcs):
    """Literal day-by-day re-simulation of the trading cash dynamics.

    ``prices`` has one more entry than ``actions``; ``tcs`` gives the percent
    fee for each step. Returns (cash_curve, rewards, wiped) where the curve
    starts at initial_cash. Stops early when a position's settlement value
    hits zero (cash floored at one currency unit if fully committed).
    """
    cash = initial_cash
    curve = [cash]
    rewards = []
    wiped = False
    for k, a in enumerate(actions):
        p_open, p_close = prices[k], prices[k + 1]
        if a == 0:
            new_cash = cash
        else:
            held = abs(a) * cash
            shares = held / p_open
            fee = shares * tcs[k] * p_open / 100.0
            if a > 0:
                profit = shares * (p_close - p_open)
            else:
                profit = shares * (p_open - p_close)
            pot = profit + held - fee
            if pot > 0.0:
                new_cash = cash - held + pot
            else:
                new_cash = cash - held
                if new_cash < 1.0:
                    new_cash = 1.0
                wiped = True
        rewards.append(math.log(new_cash / cash))
        cash = new_cash
        curve.append(cash)
        if wiped:
            break
    return curve, rewards, wiped


def finite_difference_grads(f, params, h=1e-5):
    """Central-difference gradient of scalar f(params) w.r.t. each array."""
    grads = []
    for arr in params:
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gf = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = f()
            flat[i] = orig - h
            down = f()
            flat[i] = orig
            gf[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def rel_close(a, b, rel=1e-4, abs_floor=1e-6):
    """True when a and b agree to ``rel`` relative (with an absolute floor)."""
    return abs(a - b) <= max(abs_floor, rel * max(abs(a), abs(b)))


def value_iteration(next_state, reward, gamma, tol=1e-12, max_iter=100_000):
    """Bellman-optimal Q for a deterministic continuing MDP given as arrays."""
    n_states, n_actions = next_state.shape
    q = np.zeros((n_states, n_actions))
    for _ in range(max_iter):
        v = q.max(axis=1)
        q_new = reward + gamma * v[next_state]
        if np.abs(q_new - q).max() < tol:
            return q_new
        q = q_new
    raise RuntimeError("value iteration did not converge")


def t_density(x, df):
    log_norm = (
        math.lgamma((df + 1) / 2.0)
        - math.lgamma(df / 2.0)
        - 0.5 * math.log(df * math.pi)
    )
    return math.exp(log_norm - ((df + 1) / 2.0) * math.log1p(x * x / df))


def t_tail_by_quadrature(t0, df):
    """P(T > t0) by adaptive numerical integration of the t density."""
    from scipy.integrate import quad

    if t0 >= 0:
        value, _ = quad(t_density, t0, math.inf, args=(df,))
        return value
    value, _ = quad(t_density, -math.inf, t0, args=(df,))
    return 1.0 - value
