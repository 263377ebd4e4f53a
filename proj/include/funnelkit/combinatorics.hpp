#pragma once

namespace funnelkit {

/// C(n, k) as a double; exact for the small arguments used here.
constexpr double binomial(int n, int k) noexcept {
    if (k < 0 || k > n) {
        return 0.0;
    }
    if (k > n - k) {
        k = n - k;
    }
    double c = 1.0;
    for (int i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i;
    }
    return c;
}

} // namespace funnelkit
