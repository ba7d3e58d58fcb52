"""Reference values derived in closed form; frozen before the implementation was tested."""

import math

SQRT2 = math.sqrt(2.0)

# Fisher: f = 0, g = 1, h = x(1-x), d = 1, p = 2
FISHER = dict(ell_p=1.0, L_p=1.0, K0=1.0, F0=0.0, G0=1.0, f0=0.0, g0=1.0, c_star=2.0,
              lower=2.0, upper=2.0)
FISHER_RHS_C2_XI_HALF_Y_QUARTER = 1.0        # 2 - (1/4)/(1/4)
FISHER_ETA_C1_MIN = 0.75                     # t^2 - t + 1
FISHER_BAND_C3 = ((3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2)   # roots of t^2 - 3t + 1
FISHER_DELTA_C2_R01 = 0.99 * min(math.sqrt(0.009), 0.09 / 6.0)      # 0.01485

# degenerate Fisher: d = x, exact y = xi(1 - xi)/sqrt(2) at c = 1/sqrt(2)
DEGEN = dict(ell_p=0.0, K0=3.0 / 16.0, lower=0.0, upper=math.sqrt(3.0) / 2.0, c_star=1.0 / SQRT2)
DEGEN_LOWER_SOLUTION_C1 = dict(beta=1.0, threshold=2.0 * math.sqrt(3.0 / 16.0), slope=0.5)
DEGEN_B = SQRT2 * math.log(2.0)


def degen_y(xi):
    return xi * (1.0 - xi) / SQRT2


def degen_v(z):
    # w(xi) = -int_{1/2}^xi sqrt2/(1 - t) dt = sqrt2 ln(2(1 - xi)), inverted
    return 1.0 - 0.5 * math.exp(z / SQRT2)


# Fisher with f = Heaviside(x - 1/2)
CONVECTION = dict(F0=0.5, lower=2.0, simple_upper=2.5)

# regularization targets
STEP_DOWN_INF = 1.7       # 2.2 - H(x - 1/2): average minimized at xi = 1
STEP_SUP = 0.5            # H(x - 1/2): average maximized at xi = 1
