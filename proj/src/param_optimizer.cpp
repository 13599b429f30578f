#include "qkd/param_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>

#include "qkd/errors.hpp"
#include "qkd/parallel.hpp"

namespace qkd {

namespace {

constexpr int kDim = 6;
using Point = std::array<double, kDim>;

double logistic(double u) { return 1.0 / (1.0 + std::exp(-std::clamp(u, -40.0, 40.0))); }

double logit(double s) {
    s = std::clamp(s, 1e-12, 1.0 - 1e-12);
    return std::log(s / (1.0 - s));
}

// Unconstrained coordinates -> feasible spec. Intensities map through
// logistic squashes honoring mu_x < mu_y; the probabilities go through a
// softmax against the vacuum weight, keeping the simplex open.
SourceSpec decode(const Point& u, const SearchBounds& b) {
    SourceSpec s;
    s.mu_x = b.mu_x_min + (b.mu_x_max - b.mu_x_min) * logistic(u[0]);
    double y_lo = s.mu_x + b.mu_gap_min;
    s.mu_y = y_lo + (b.mu_y_max - y_lo) * logistic(u[1]);
    s.mu_z = b.mu_z_min + (b.mu_z_max - b.mu_z_min) * logistic(u[2]);
    double ex = std::exp(std::clamp(u[3], -40.0, 40.0));
    double ey = std::exp(std::clamp(u[4], -40.0, 40.0));
    double ez = std::exp(std::clamp(u[5], -40.0, 40.0));
    double z = 1.0 + ex + ey + ez;
    s.p_x = ex / z;
    s.p_y = ey / z;
    s.p_z = ez / z;
    return s;
}

Point encode(const SourceSpec& s, const SearchBounds& b) {
    Point u{};
    u[0] = logit((s.mu_x - b.mu_x_min) / (b.mu_x_max - b.mu_x_min));
    double y_lo = s.mu_x + b.mu_gap_min;
    u[1] = logit((s.mu_y - y_lo) / std::max(b.mu_y_max - y_lo, 1e-9));
    u[2] = logit((s.mu_z - b.mu_z_min) / (b.mu_z_max - b.mu_z_min));
    double po = std::max(s.p_o(), 1e-12);
    u[3] = std::log(std::max(s.p_x, 1e-12) / po);
    u[4] = std::log(std::max(s.p_y, 1e-12) / po);
    u[5] = std::log(std::max(s.p_z, 1e-12) / po);
    return u;
}

double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
        index /= static_cast<std::uint64_t>(base);
    }
    return r;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Low-discrepancy start points with a seeded rotation, mapped to the
// unconstrained space.
Point start_point(int index, std::uint64_t seed, const SearchBounds&) {
    static constexpr int kBases[kDim] = {2, 3, 5, 7, 11, 13};
    Point u;
    for (int j = 0; j < kDim; ++j) {
        double shift = static_cast<double>(splitmix64(seed ^ (0xa5ULL + static_cast<std::uint64_t>(j)))) /
                       static_cast<double>(std::numeric_limits<std::uint64_t>::max());
        double q = halton(static_cast<std::uint64_t>(index) + 1, kBases[j]) + shift;
        q -= std::floor(q);
        u[static_cast<std::size_t>(j)] = logit(0.02 + 0.96 * q);
    }
    return u;
}

struct NmOutcome {
    Point best_u;
    double best_value = -1e30;
    int iterations = 0;
    std::int64_t evaluations = 0;
    std::vector<double> incumbents;
};

// Standard downhill simplex, maximizing `f`.
template <class F>
NmOutcome nelder_mead(F&& f, const Point& u0, double step, int max_iterations, double rel_tol,
                      std::int64_t* eval_counter) {
    constexpr double kAlpha = 1.0, kGamma = 2.0, kRho = 0.5, kSigma = 0.5;
    const double kStep = step;
    struct Vertex {
        Point u;
        double v;
    };
    std::vector<Vertex> simplex;
    auto eval = [&](const Point& u) {
        ++*eval_counter;
        return f(u);
    };
    simplex.push_back({u0, eval(u0)});
    for (int j = 0; j < kDim; ++j) {
        Point u = u0;
        u[static_cast<std::size_t>(j)] += kStep;
        simplex.push_back({u, eval(u)});
    }
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.v > b.v; };
    NmOutcome out;
    for (int it = 0; it < max_iterations; ++it) {
        std::sort(simplex.begin(), simplex.end(), by_value);
        out.iterations = it + 1;
        out.incumbents.push_back(simplex.front().v);
        double spread = simplex.front().v - simplex.back().v;
        if (it > 0 && spread <= rel_tol * std::max(std::abs(simplex.front().v), 1e-300)) break;
        Point centroid{};
        for (int i = 0; i < kDim; ++i)
            for (int j = 0; j < kDim; ++j)
                centroid[static_cast<std::size_t>(j)] +=
                    simplex[static_cast<std::size_t>(i)].u[static_cast<std::size_t>(j)] / kDim;
        auto blend = [&](double t) {
            Point u;
            for (int j = 0; j < kDim; ++j)
                u[static_cast<std::size_t>(j)] =
                    centroid[static_cast<std::size_t>(j)] +
                    t * (centroid[static_cast<std::size_t>(j)] -
                         simplex.back().u[static_cast<std::size_t>(j)]);
            return u;
        };
        Point ur = blend(kAlpha);
        double vr = eval(ur);
        if (vr > simplex.front().v) {
            Point ue = blend(kGamma);
            double ve = eval(ue);
            simplex.back() = ve > vr ? Vertex{ue, ve} : Vertex{ur, vr};
        } else if (vr > simplex[kDim - 1].v) {
            simplex.back() = {ur, vr};
        } else {
            Point uc = blend(-kRho);
            double vc = eval(uc);
            if (vc > simplex.back().v) {
                simplex.back() = {uc, vc};
            } else {
                for (int i = 1; i <= kDim; ++i) {
                    for (int j = 0; j < kDim; ++j)
                        simplex[static_cast<std::size_t>(i)].u[static_cast<std::size_t>(j)] =
                            simplex.front().u[static_cast<std::size_t>(j)] +
                            kSigma * (simplex[static_cast<std::size_t>(i)].u[static_cast<std::size_t>(j)] -
                                      simplex.front().u[static_cast<std::size_t>(j)]);
                    simplex[static_cast<std::size_t>(i)].v = eval(simplex[static_cast<std::size_t>(i)].u);
                }
            }
        }
        out.evaluations = *eval_counter;
    }
    std::sort(simplex.begin(), simplex.end(), by_value);
    out.best_u = simplex.front().u;
    out.best_value = simplex.front().v;
    out.evaluations = *eval_counter;
    return out;
}

bool lexicographic_less(const SourceSpec& a, const SourceSpec& b) {
    auto key = [](const SourceSpec& s) {
        return std::array{s.mu_x, s.mu_y, s.mu_z, s.p_x, s.p_y, s.p_z};
    };
    return key(a) < key(b);
}

OptimizationResult optimize_impl(const ChannelParams& params, std::int64_t n_total,
                                 const FluctuationPolicy& policy, const SearchConfig& search,
                                 RateMethod method, const KeyRateConfig& rate_cfg,
                                 const std::optional<SourceSpec>& warm) {
    KeyRateConfig inner = rate_cfg;
    inner.threads = 1;  // starts run in parallel; keep the grid serial inside

    // The search objective keeps the negative raw rate where the clamped
    // rate is flat at zero, so the simplex still has a descent direction.
    auto objective = [&](const Point& u) {
        SourceSpec spec = decode(u, search.bounds);
        if (!validate_spec(spec).empty()) return -1.0;
        ObservedStats stats;
        try {
            stats = simulate_observed(spec, params, n_total, SimMode::expected);
        } catch (const ConfigError&) {
            return -1.0;  // degenerate pair counts
        }
        KeyRateResult r = evaluate_rate(stats, spec, params, policy, method, inner);
        return r.rate_per_pair > 0.0 ? r.rate_per_pair : std::max(r.raw_rate, -1.0);
    };

    int n_starts = std::max(search.starts, 1);
    std::vector<StartRecord> records(static_cast<std::size_t>(n_starts));
    std::vector<NmOutcome> outcomes(static_cast<std::size_t>(n_starts));
    parallel_for(n_starts, search.threads, [&](std::int64_t i) {
        Point u0 = (i == 0 && warm) ? encode(*warm, search.bounds)
                                    : start_point(static_cast<int>(i), search.seed, search.bounds);
        std::int64_t evals = 0;
        // The simplex tends to flatten out early in six dimensions; restart
        // it around the incumbent with a shrinking step while that helps.
        NmOutcome acc;
        Point u = u0;
        double step = 0.8;
        for (int round = 0; round < 3; ++round) {
            NmOutcome out =
                nelder_mead(objective, u, step, search.max_iterations, search.tolerance, &evals);
            acc.incumbents.insert(acc.incumbents.end(), out.incumbents.begin(),
                                  out.incumbents.end());
            acc.iterations += out.iterations;
            bool improved =
                round == 0 || out.best_value - acc.best_value >
                                  search.tolerance * std::max(std::abs(acc.best_value), 1e-300);
            if (round == 0 || out.best_value > acc.best_value) {
                acc.best_value = out.best_value;
                acc.best_u = out.best_u;
            }
            if (!improved) break;
            u = acc.best_u;
            step *= 0.35;
        }
        acc.evaluations = evals;
        outcomes[static_cast<std::size_t>(i)] = acc;
        StartRecord rec;
        rec.start_index = static_cast<int>(i);
        rec.spec = decode(acc.best_u, search.bounds);
        rec.rate = std::max(0.0, acc.best_value);
        rec.iterations = acc.iterations;
        rec.evaluations = evals;
        rec.incumbents = acc.incumbents;
        records[static_cast<std::size_t>(i)] = rec;
    });

    int best = -1;
    for (int i = 0; i < n_starts; ++i) {
        if (best < 0) {
            best = i;
            continue;
        }
        const auto &a = outcomes[static_cast<std::size_t>(i)], &b = outcomes[static_cast<std::size_t>(best)];
        if (a.best_value > b.best_value ||
            (a.best_value == b.best_value &&
             lexicographic_less(records[static_cast<std::size_t>(i)].spec,
                                records[static_cast<std::size_t>(best)].spec)))
            best = i;
    }
    OptimizationResult result;
    result.history = records;
    for (const auto& r : records) result.evaluations += r.evaluations;
    result.best_spec = records[static_cast<std::size_t>(best)].spec;
    if (!validate_spec(result.best_spec).empty())
        throw NumericError("optimizer produced no feasible candidate");
    ObservedStats stats = simulate_observed(result.best_spec, params, n_total, SimMode::expected);
    result.best_result = evaluate_rate(stats, result.best_spec, params, policy, method, rate_cfg);
    return result;
}

}  // namespace

OptimizationResult optimize(const ChannelParams& params, std::int64_t n_total,
                            const FluctuationPolicy& policy, const SearchConfig& search,
                            RateMethod method, const KeyRateConfig& rate_cfg) {
    return optimize_impl(params, n_total, policy, search, method, rate_cfg, std::nullopt);
}

namespace {

ScanRow row_from(const OptimizationResult& opt, double distance_km, std::int64_t n_total,
                 RateMethod method, double repetition_rate_hz) {
    ScanRow row;
    row.distance_km = distance_km;
    row.n_total = n_total;
    row.method = method;
    row.rate_per_pair = opt.best_result.rate_per_pair;
    row.bits_per_second = opt.best_result.rate_per_pair * repetition_rate_hz;
    row.spec = opt.best_spec;
    row.h_star = opt.best_result.h_star;
    row.s11 = opt.best_result.s11_at_star;
    row.e11 = opt.best_result.e11_at_star;
    row.ledger_total = opt.best_result.ledger.total();
    return row;
}

}  // namespace

std::vector<ScanRow> scan_distance(const ChannelParams& base, double d_min, double d_max,
                                   double step, std::int64_t n_total,
                                   const FluctuationPolicy& policy,
                                   const std::vector<RateMethod>& methods,
                                   const SearchConfig& search, const KeyRateConfig& rate_cfg,
                                   double repetition_rate_hz) {
    if (d_max < d_min || step <= 0.0) throw ConfigError("scan_distance: empty distance range");
    std::vector<double> distances;
    for (double d = d_min; d <= d_max + 1e-9; d += step) distances.push_back(d);
    std::vector<ScanRow> rows;
    for (RateMethod method : methods) {
        std::optional<SourceSpec> warm;
        for (double d : distances) {
            ChannelParams params = base;
            params.distance_km = d;
            OptimizationResult opt =
                optimize_impl(params, n_total, policy, search, method, rate_cfg, warm);
            warm = opt.best_spec;
            rows.push_back(row_from(opt, d, n_total, method, repetition_rate_hz));
        }
    }
    return rows;
}

std::vector<ScanRow> scan_ntotal(const ChannelParams& base, double distance_km,
                                 const std::vector<std::int64_t>& nt_list,
                                 const FluctuationPolicy& policy,
                                 const std::vector<RateMethod>& methods,
                                 const SearchConfig& search, const KeyRateConfig& rate_cfg,
                                 double repetition_rate_hz) {
    if (nt_list.empty()) throw ConfigError("scan_ntotal: empty pulse-count list");
    ChannelParams params = base;
    params.distance_km = distance_km;
    std::vector<ScanRow> rows;
    for (RateMethod method : methods) {
        std::optional<SourceSpec> warm;
        for (std::int64_t nt : nt_list) {
            OptimizationResult opt =
                optimize_impl(params, nt, policy, search, method, rate_cfg, warm);
            warm = opt.best_spec;
            rows.push_back(row_from(opt, distance_km, nt, method, repetition_rate_hz));
        }
    }
    return rows;
}

std::string scan_csv(const std::vector<ScanRow>& rows) {
    std::string out =
        "distance_km,n_total,method,rate_per_pair,bps,mu_x,mu_y,mu_z,p_x,p_y,p_z,h_star,s11,e11,"
        "ledger_total\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "%.6g,%lld,%s,%.12g,%.12g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.12g,%.12g,%.12g,%"
                      ".6g\n",
                      r.distance_km, static_cast<long long>(r.n_total), to_string(r.method),
                      r.rate_per_pair, r.bits_per_second, r.spec.mu_x, r.spec.mu_y, r.spec.mu_z,
                      r.spec.p_x, r.spec.p_y, r.spec.p_z, r.h_star, r.s11, r.e11, r.ledger_total);
        out += buf;
    }
    return out;
}

}  // namespace qkd
