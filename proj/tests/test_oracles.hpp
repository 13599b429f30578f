#pragma once

// Independent oracles used only by the tests. Everything here recomputes
// quantities through a different route than the library: photon-number
// enumeration instead of coherent-state closed forms, bisection on the exact
// normal CDF instead of the rational quantile, closed-root tail inversion
// instead of the library's bisection.

#include <array>
#include <cmath>
#include <cstdint>

#include "qkd/channel_model.hpp"

namespace oracles {

// e^{-mu} mu^k / k! through the log form, in extended precision.
inline double poisson_log_form(double mu, int k) {
    if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
    long double lmu = mu;
    long double lg = lgammal(static_cast<long double>(k) + 1.0L);
    return static_cast<double>(expl(-lmu + k * logl(lmu) - lg));
}

// Upper-tail standard normal quantile by bisection on erfc.
inline double normal_quantile_bisect(double epsilon) {
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        double tail = 0.5 * std::erfc(mid / std::sqrt(2.0));
        (tail > epsilon ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Closed roots of the two tail conditions the library inverts by bisection.
inline double chernoff_upper_root(double k, double eps) {
    double L = std::log(1.0 / eps);
    return k + L + std::sqrt(L * L + 2.0 * k * L);
}

inline double chernoff_lower_root(double k, double eps) {
    double L = std::log(1.0 / eps);
    if (k <= L) return 0.0;
    return k + L / 2.0 - std::sqrt(8.0 * k * L + L * L) / 2.0;
}

// Heralding and error rates for an exact single-photon pair |1,1>, by
// enumerating photon survival, the two-photon interference distribution over
// the four detectors, and dark-count completions of the accepted patterns.
// Misalignment enters as the same classical flip the library uses.
struct FockGain {
    double q = 0.0;
    double eq = 0.0;
};

inline FockGain fock_pair_gain(double eta_a, double eta_b, const qkd::ChannelParams& params,
                               qkd::Basis basis) {
    const double pd = params.p_d;
    static constexpr int kPatterns[4][2] = {{0, 3}, {1, 2}, {0, 1}, {2, 3}};  // psi-, psi-, psi+, psi+

    double pol[2][2];
    if (basis == qkd::Basis::X) {
        double s = 1.0 / std::sqrt(2.0);
        pol[0][0] = s; pol[0][1] = s;
        pol[1][0] = s; pol[1][1] = -s;
    } else {
        pol[0][0] = 1.0; pol[0][1] = 0.0;
        pol[1][0] = 0.0; pol[1][1] = 1.0;
    }

    // P(exactly the two detectors of `pat` click | occupied detector set)
    auto pattern_prob = [&](const int* pat, const std::array<int, 4>& occupied) {
        double p = 1.0;
        for (int d = 0; d < 4; ++d) {
            bool in_pattern = d == pat[0] || d == pat[1];
            if (occupied[static_cast<std::size_t>(d)]) {
                if (!in_pattern) return 0.0;  // an occupied detector always clicks
            } else {
                p *= in_pattern ? pd : 1.0 - pd;
            }
        }
        return p;
    };

    double q_total = 0.0, err_total = 0.0;
    for (int bit_a = 0; bit_a < 2; ++bit_a) {
        for (int bit_b = 0; bit_b < 2; ++bit_b) {
            const double* u = pol[bit_a];
            const double* w = pol[bit_b];
            // mode amplitudes after the splitter: Alice (+,+), Bob (+,-)
            std::array<double, 4> alpha = {u[0], u[1], u[0], u[1]};
            std::array<double, 4> beta = {w[0], w[1], -w[0], -w[1]};
            for (auto& v : alpha) v /= std::sqrt(2.0);
            for (auto& v : beta) v /= std::sqrt(2.0);

            double err_weight[4];  // error assignment per accepted pattern
            for (int pi = 0; pi < 4; ++pi) {
                bool is_psi_minus = pi < 2;
                bool equal_bits = bit_a == bit_b;
                bool err;
                if (basis == qkd::Basis::X)
                    err = is_psi_minus ? equal_bits : !equal_bits;
                else
                    err = equal_bits;
                err_weight[pi] = err ? 1.0 : 0.0;
            }

            auto accumulate = [&](double case_prob, const std::array<int, 4>& occupied,
                                  double dist_prob) {
                for (int pi = 0; pi < 4; ++pi) {
                    double p = case_prob * dist_prob * pattern_prob(kPatterns[pi], occupied);
                    q_total += p;
                    err_total += err_weight[pi] * p;
                }
            };

            // both photons lost
            accumulate((1.0 - eta_a) * (1.0 - eta_b), {0, 0, 0, 0}, 1.0);
            // exactly one photon survives
            for (int which = 0; which < 2; ++which) {
                double case_prob = which == 0 ? eta_a * (1.0 - eta_b) : eta_b * (1.0 - eta_a);
                const std::array<double, 4>& amp = which == 0 ? alpha : beta;
                for (int m = 0; m < 4; ++m) {
                    std::array<int, 4> occ{};
                    occ[static_cast<std::size_t>(m)] = 1;
                    accumulate(case_prob, occ, amp[static_cast<std::size_t>(m)] *
                                                    amp[static_cast<std::size_t>(m)]);
                }
            }
            // both survive: two-photon amplitudes with bosonic interference
            {
                double case_prob = eta_a * eta_b;
                for (int m = 0; m < 4; ++m) {
                    for (int n = m; n < 4; ++n) {
                        double amp2;
                        if (m == n)
                            amp2 = 2.0 * alpha[static_cast<std::size_t>(m)] *
                                   alpha[static_cast<std::size_t>(m)] *
                                   beta[static_cast<std::size_t>(m)] *
                                   beta[static_cast<std::size_t>(m)];
                        else {
                            double a = alpha[static_cast<std::size_t>(m)] *
                                           beta[static_cast<std::size_t>(n)] +
                                       alpha[static_cast<std::size_t>(n)] *
                                           beta[static_cast<std::size_t>(m)];
                            amp2 = a * a;
                        }
                        std::array<int, 4> occ{};
                        occ[static_cast<std::size_t>(m)] = 1;
                        occ[static_cast<std::size_t>(n)] = 1;
                        accumulate(case_prob, occ, amp2);
                    }
                }
            }
        }
    }
    double q = q_total / 4.0;
    double err0 = err_total / 4.0;
    double eq = params.e_d * (q - err0) + (1.0 - params.e_d) * err0;
    return {q, eq};
}

// Single-photon-pair yield extracted from the coherent closed form: the
// mu_a*mu_b coefficient of e^{mu_a+mu_b} Q(mu_a, mu_b), via bivariate
// polynomial fits on a small grid.
namespace detail {

// coefficients of the degree-(n-1) polynomial through (xs, ys)
inline std::array<double, 5> polyfit5(const std::array<double, 5>& xs,
                                      const std::array<double, 5>& ys) {
    // Gaussian elimination on the 5x5 Vandermonde system.
    double m[5][6];
    for (int r = 0; r < 5; ++r) {
        double p = 1.0;
        for (int c = 0; c < 5; ++c) {
            m[r][c] = p;
            p *= xs[static_cast<std::size_t>(r)];
        }
        m[r][5] = ys[static_cast<std::size_t>(r)];
    }
    for (int c = 0; c < 5; ++c) {
        int piv = c;
        for (int r = c + 1; r < 5; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        for (int k = 0; k < 6; ++k) std::swap(m[c][k], m[piv][k]);
        for (int r = 0; r < 5; ++r) {
            if (r == c) continue;
            double f = m[r][c] / m[c][c];
            for (int k = c; k < 6; ++k) m[r][k] -= f * m[c][k];
        }
    }
    std::array<double, 5> coeff;
    for (int c = 0; c < 5; ++c) coeff[static_cast<std::size_t>(c)] = m[c][5] / m[c][c];
    return coeff;
}

}  // namespace detail

inline double y11_from_gain(double eta_a, double eta_b, const qkd::ChannelParams& params,
                            qkd::Basis basis) {
    constexpr double h = 0.02;
    std::array<double, 5> nodes{h, 2 * h, 3 * h, 4 * h, 5 * h};
    std::array<double, 5> c1_of_mub;
    for (int j = 0; j < 5; ++j) {
        std::array<double, 5> g;
        for (int i = 0; i < 5; ++i) {
            double mua = nodes[static_cast<std::size_t>(i)];
            double mub = nodes[static_cast<std::size_t>(j)];
            qkd::GainPair gp = basis == qkd::Basis::X
                                   ? qkd::gain_x(mua, mub, eta_a, eta_b, params)
                                   : qkd::gain_z(mua, mub, eta_a, eta_b, params);
            g[static_cast<std::size_t>(i)] = std::exp(mua + mub) * gp.q;
        }
        c1_of_mub[static_cast<std::size_t>(j)] = detail::polyfit5(nodes, g)[1];
    }
    return detail::polyfit5(nodes, c1_of_mub)[1];
}

}  // namespace oracles
