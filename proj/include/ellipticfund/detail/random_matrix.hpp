#pragma once

#include <random>

namespace ellipticfund {

template <class Rng>
SymMatrix random_sym(int n, Rng& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) m(i, j) = u(rng);
    return m;
}

template <class Rng>
SymMatrix random_psd(int n, Rng& rng, double scale) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> b(static_cast<std::size_t>(n * n));
    for (auto& v : b) v = z(rng);
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += b[i * n + k] * b[j * n + k];
            m(i, j) = scale * s / n;
        }
    return m;
}

}  // namespace ellipticfund
