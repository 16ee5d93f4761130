"""
Gradient-free minimisers: Nelder-Mead simplex and Powell's direction set.

Both are deterministic for a given objective and start point, and both
record the best objective value after each outer iteration (simplex step or
Powell cycle) in ``trace``.  Non-finite objective values are treated as
``+inf`` once the method has started.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InitializationError

GOLD = 1.618033988749895
CGOLD = 0.3819660112501051


@dataclass
class OptimizeResult:
    x_best: np.ndarray
    f_best: float
    iterations: int
    evaluations: int
    converged: bool
    message: str = ""
    trace: list = field(default_factory=list)


class _Counted:
    def __init__(self, f):
        self.f = f
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        v = float(self.f(x))
        return v if np.isfinite(v) else np.inf


def nelder_mead(f, x0, init_step=0.1, f_tol=1e-8, x_tol=1e-6, max_iter=2000,
                max_eval=None, keep_trace=True):
    """Minimise ``f`` with the Nelder-Mead simplex.

    Reflection, expansion, contraction and shrink coefficients are
    1, 2, 0.5 and 0.5.  The initial simplex is ``x0`` plus ``init_step``
    along each coordinate axis.  Stops when the spread of objective values
    over the simplex is at most ``f_tol`` and its largest vertex offset from
    the best vertex is at most ``x_tol``.  Requiring both avoids a false stop
    when vertices straddle the minimum at equal height.

    Raises:
        InitializationError: ``f`` is not finite at some initial vertex.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64)).copy()
    n = x0.size
    fun = _Counted(f)
    steps = np.broadcast_to(np.asarray(init_step, dtype=np.float64), (n,))
    sim = np.vstack([x0] + [x0 + steps[i] * np.eye(n)[i] for i in range(n)])
    fsim = np.array([fun(v) for v in sim])
    if not np.all(np.isfinite(fsim)):
        bad = int(np.argmax(~np.isfinite(fsim)))
        raise InitializationError(f"objective is not finite at initial vertex {bad}")
    if max_eval is None:
        max_eval = 200 * max_iter * max(n, 1)

    trace = []
    iterations = 0
    converged = False
    message = "iteration budget exhausted"
    while True:
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        if keep_trace:
            trace.append(float(fsim[0]))
        if fsim[-1] - fsim[0] <= f_tol and np.max(np.abs(sim[1:] - sim[0])) <= x_tol:
            converged = True
            message = "simplex converged"
            break
        if iterations >= max_iter:
            break
        if fun.calls >= max_eval:
            message = "evaluation budget exhausted"
            break
        iterations += 1

        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = centroid + (centroid - worst)
        fr = fun(xr)
        if fr < fsim[0]:
            xe = centroid + 2.0 * (xr - centroid)
            fe = fun(xe)
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
            continue
        if fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
            continue
        if fr < fsim[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = fun(xc)
            if fc <= fr:
                sim[-1], fsim[-1] = xc, fc
                continue
        else:
            xcc = centroid + 0.5 * (worst - centroid)
            fcc = fun(xcc)
            if fcc < fsim[-1]:
                sim[-1], fsim[-1] = xcc, fcc
                continue
        # shrink towards the best vertex
        sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
        fsim[1:] = [fun(v) for v in sim[1:]]

    return OptimizeResult(x_best=sim[0].copy(), f_best=float(fsim[0]), iterations=iterations,
                          evaluations=fun.calls, converged=converged, message=message,
                          trace=trace)


def _bracket(phi, xa=0.0, xb=1.0, grow_limit=110.0, max_iter=1000):
    """Find a < b < c (or reversed) with phi(b) <= phi(a), phi(c)."""
    fa, fb = phi(xa), phi(xb)
    if fa < fb:
        xa, xb, fa, fb = xb, xa, fb, fa
    xc = xb + GOLD * (xb - xa)
    fc = phi(xc)
    it = 0
    while fc < fb:
        tmp1 = (xb - xa) * (fb - fc)
        tmp2 = (xb - xc) * (fb - fa)
        val = tmp2 - tmp1
        denom = 2.0 * (val if abs(val) >= 1e-21 else np.copysign(1e-21, val))
        w = xb - ((xb - xc) * tmp2 - (xb - xa) * tmp1) / denom
        wlim = xb + grow_limit * (xc - xb)
        it += 1
        if it > max_iter:
            break
        if (w - xc) * (xb - w) > 0.0:
            fw = phi(w)
            if fw < fc:
                return xb, w, xc, fb, fw, fc
            if fw > fb:
                return xa, xb, w, fa, fb, fw
            w = xc + GOLD * (xc - xb)
            fw = phi(w)
        elif (w - wlim) * (wlim - xc) >= 0.0:
            w = wlim
            fw = phi(w)
        elif (w - wlim) * (xc - w) > 0.0:
            fw = phi(w)
            if fw < fc:
                xb, xc, w = xc, w, w + GOLD * (w - xc)
                fb, fc, fw = fc, fw, phi(w)
        else:
            w = xc + GOLD * (xc - xb)
            fw = phi(w)
        xa, xb, xc = xb, xc, w
        fa, fb, fc = fb, fc, fw
    return xa, xb, xc, fa, fb, fc


def _brent(phi, xa, xb, xc, fb, tol, max_iter=500):
    """Brent's parabolic/golden line minimisation inside a bracket."""
    mintol = 1e-11
    a, b = (xa, xc) if xa < xc else (xc, xa)
    x = w = v = xb
    fx = fw = fv = fb
    deltax = 0.0
    rat = 0.0
    for _ in range(max_iter):
        tol1 = tol * abs(x) + mintol
        tol2 = 2.0 * tol1
        xmid = 0.5 * (a + b)
        if abs(x - xmid) < (tol2 - 0.5 * (b - a)):
            break
        if abs(deltax) <= tol1:
            deltax = (a - x) if x >= xmid else (b - x)
            rat = CGOLD * deltax
        else:
            tmp1 = (x - w) * (fx - fv)
            tmp2 = (x - v) * (fx - fw)
            p = (x - v) * tmp2 - (x - w) * tmp1
            tmp2 = 2.0 * (tmp2 - tmp1)
            if tmp2 > 0.0:
                p = -p
            tmp2 = abs(tmp2)
            dx_temp = deltax
            deltax = rat
            if (p > tmp2 * (a - x)) and (p < tmp2 * (b - x)) and (abs(p) < abs(0.5 * tmp2 * dx_temp)):
                rat = p / tmp2
                u = x + rat
                if (u - a) < tol2 or (b - u) < tol2:
                    rat = tol1 if xmid - x >= 0 else -tol1
            else:
                deltax = (a - x) if x >= xmid else (b - x)
                rat = CGOLD * deltax
        u = x + (rat if abs(rat) >= tol1 else (tol1 if rat >= 0 else -tol1))
        fu = phi(u)
        if fu > fx:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
        else:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
    return x, fx


def _line_minimise(fun, x, direction, fx, tol):
    def phi(t):
        return fun(x + t * direction)

    xa, xb, xc, fa, fb, fc = _bracket(phi)
    t, ft = _brent(phi, xa, xb, xc, fb, tol)
    if ft < fx:
        return x + t * direction, ft
    return x, fx


def powell(f, x0, line_tol=1e-8, f_tol=1e-12, max_iter=1000, max_eval=None,
           directions=None, keep_trace=True):
    """Minimise ``f`` with Powell's conjugate direction method.

    Each cycle line-minimises along every direction in the set (bracketing
    then Brent), then tries the extrapolated point along the cycle's net
    displacement.  When that displacement passes Powell's test it replaces
    the direction that gave the largest single decrease.  Converges when a
    cycle improves ``f`` by a relative amount below ``f_tol``.

    Raises:
        InitializationError: ``f`` is not finite at ``x0``.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=np.float64)).copy()
    n = x.size
    fun = _Counted(f)
    fval = fun(x)
    if not np.isfinite(fval):
        raise InitializationError("objective is not finite at the start point")
    direc = np.eye(n) if directions is None else np.array(directions, dtype=np.float64)
    if max_eval is None:
        max_eval = 1000 * max_iter * max(n, 1)

    trace = [fval] if keep_trace else []
    iterations = 0
    converged = False
    message = "iteration budget exhausted"
    while iterations < max_iter:
        if fun.calls >= max_eval:
            message = "evaluation budget exhausted"
            break
        iterations += 1
        fx = fval
        x_start = x.copy()
        biggest = 0.0
        big_index = 0
        for i in range(n):
            before = fval
            x, fval = _line_minimise(fun, x, direc[i], fval, line_tol)
            if before - fval > biggest:
                biggest = before - fval
                big_index = i
        if keep_trace:
            trace.append(fval)
        if 2.0 * (fx - fval) <= f_tol * (abs(fx) + abs(fval)) + 1e-20:
            converged = True
            message = "relative improvement below f_tol"
            break
        step = x - x_start
        fx2 = fun(x + step)
        if fx > fx2:
            t = 2.0 * (fx + fx2 - 2.0 * fval) * (fx - fval - biggest) ** 2
            t -= biggest * (fx - fx2) ** 2
            if t < 0.0:
                x, fval = _line_minimise(fun, x, step, fval, line_tol)
                if np.any(step):
                    direc[big_index] = direc[-1]
                    direc[-1] = step
                if keep_trace:
                    trace[-1] = fval
    return OptimizeResult(x_best=x, f_best=float(fval), iterations=iterations,
                          evaluations=fun.calls, converged=converged, message=message,
                          trace=trace)
