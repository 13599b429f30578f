#include "qkd/keyrate_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qkd/errors.hpp"
#include "qkd/parallel.hpp"

namespace qkd {

double binary_entropy(double x) {
    if (x < 0.0 || x > 1.0) throw std::domain_error("binary_entropy: argument outside [0, 1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

const char* to_string(RateMethod m) {
    switch (m) {
        case RateMethod::this_work: return "this_work";
        case RateMethod::joint_separate: return "joint_separate";
        case RateMethod::independent: return "independent";
    }
    return "?";
}

RateMethod rate_method_from_string(std::string_view name) {
    if (name == "this_work") return RateMethod::this_work;
    if (name == "joint_separate") return RateMethod::joint_separate;
    if (name == "independent") return RateMethod::independent;
    throw ConfigError("unknown rate method: " + std::string(name));
}

namespace {

// Everything H-independent, assembled once per evaluation.
struct EvalContext {
    BoundCoefficients coeff;
    MeanConstraints constraints;
    HInterval interval;
    double txx_bar = 0.0;
    double s_zz = 0.0, e_zz = 0.0;
    double pz2 = 0.0;
    double ec_cost = 0.0;  // f * S_zz * H2(E_zz)
    FailureLedger ledger;
};

EvalContext make_context(const ObservedStats& stats, const SourceSpec& spec,
                         const ChannelParams& params, const FluctuationPolicy& policy) {
    stats.validate();
    EvalContext ctx;
    ctx.coeff = BoundCoefficients::from_spec(spec);
    ctx.constraints = build_constraints(stats, policy, &ctx.ledger);
    ctx.interval = h_interval(stats, spec, policy, &ctx.ledger);
    ctx.txx_bar = txx_upper(stats, policy, &ctx.ledger);
    ctx.s_zz = stats.yield(PairSource::zz);
    ctx.e_zz = stats.e_zz();
    ctx.pz2 = spec.p_z * spec.p_z;
    ctx.ec_cost = params.f * ctx.s_zz * binary_entropy(ctx.e_zz);
    return ctx;
}

double rate_formula(const EvalContext& ctx, double s11, double e11, double kappa_s,
                    double kappa_e) {
    double privacy = 0.0;
    if (s11 > 0.0) {
        double e_eff = std::clamp(kappa_e * e11, 0.0, 0.5);
        privacy = ctx.coeff.a1z * ctx.coeff.a1z * kappa_s * s11 * (1.0 - binary_entropy(e_eff));
    }
    return ctx.pz2 * (privacy - ctx.ec_cost);
}

TracePoint eval_point(const EvalContext& ctx, double h_value, double kappa_s, double kappa_e,
                      ClampFlags* flags = nullptr) {
    YieldBound yb = s11_lower_bound(ctx.constraints, ctx.coeff, h_value);
    double s11 = yb.infeasible ? 0.0 : yb.value;
    ErrorBound eb = e11_from_txx_upper(ctx.txx_bar, ctx.coeff, h_value, s11);
    if (flags) {
        flags->s11_infeasible |= yb.infeasible;
        flags->s11_clamped |= yb.clamped;
        flags->e11_clamped_low |= eb.clamped_low;
        flags->e11_clamped_high |= eb.clamped_high;
    }
    return {h_value, s11, eb.value, rate_formula(ctx, s11, eb.value, kappa_s, kappa_e)};
}

KeyRateResult finish_result(EvalContext&& ctx, std::vector<TracePoint>&& trace,
                            const KeyRateConfig& cfg, ClampFlags flags) {
    KeyRateResult res;
    res.interval = ctx.interval;
    res.kappa_s = cfg.kappa_s;
    res.kappa_e = cfg.kappa_e;
    res.flags = flags;
    res.flags.delta_clamped = ctx.interval.h - ctx.interval.delta < 0.0;
    res.trace = std::move(trace);
    const TracePoint* worst = nullptr;
    for (const auto& tp : res.trace)
        if (!worst || tp.rate < worst->rate) worst = &tp;
    if (worst) {
        res.raw_rate = worst->rate;
        res.h_star = worst->h;
        res.s11_at_star = worst->s11;
        res.e11_at_star = worst->e11;
    }
    res.rate_per_pair = std::max(0.0, res.raw_rate);
    res.ledger = std::move(ctx.ledger);
    return res;
}

// Golden-section sweep around the grid minimum; appends its evaluations.
void refine_minimum(const EvalContext& ctx, const KeyRateConfig& cfg, ClampFlags& flags,
                    std::vector<TracePoint>& trace, std::size_t min_idx, std::size_t grid_size) {
    if (grid_size < 2) return;
    double lo = trace[min_idx > 0 ? min_idx - 1 : 0].h;
    double hi = trace[std::min(min_idx + 1, grid_size - 1)].h;
    if (!(hi > lo)) return;
    double span = ctx.interval.hi() - ctx.interval.lo();
    double tol = cfg.refine_rel_tol * std::max(span, std::abs(ctx.interval.h));
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    TracePoint p1 = eval_point(ctx, x1, cfg.kappa_s, cfg.kappa_e, &flags);
    TracePoint p2 = eval_point(ctx, x2, cfg.kappa_s, cfg.kappa_e, &flags);
    trace.push_back(p1);
    trace.push_back(p2);
    for (int it = 0; it < 200 && (b - a) > tol; ++it) {
        if (p1.rate <= p2.rate) {
            b = x2;
            x2 = x1;
            p2 = p1;
            x1 = b - kInvPhi * (b - a);
            p1 = eval_point(ctx, x1, cfg.kappa_s, cfg.kappa_e, &flags);
            trace.push_back(p1);
        } else {
            a = x1;
            x1 = x2;
            p1 = p2;
            x2 = a + kInvPhi * (b - a);
            p2 = eval_point(ctx, x2, cfg.kappa_s, cfg.kappa_e, &flags);
            trace.push_back(p2);
        }
    }
}

std::vector<double> h_grid(const HInterval& interval, int grid_points) {
    double lo = interval.lo(), hi = interval.hi();
    if (!(hi > lo)) return {interval.h};
    int n = std::max(grid_points, 3);
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    g.front() = lo;
    g.back() = hi;
    return g;
}

KeyRateResult worst_case_impl(const ObservedStats& stats, const SourceSpec& spec,
                              const ChannelParams& params, const FluctuationPolicy& policy,
                              const KeyRateConfig& cfg, bool parallel) {
    EvalContext ctx = make_context(stats, spec, params, policy);
    std::vector<double> grid = h_grid(ctx.interval, cfg.grid_points);
    std::vector<TracePoint> trace(grid.size());
    ClampFlags flags;
    if (parallel) {
        std::vector<ClampFlags> local(grid.size());
        parallel_for(static_cast<std::int64_t>(grid.size()), cfg.threads, [&](std::int64_t i) {
            trace[static_cast<std::size_t>(i)] =
                eval_point(ctx, grid[static_cast<std::size_t>(i)], cfg.kappa_s, cfg.kappa_e,
                           &local[static_cast<std::size_t>(i)]);
        });
        for (const auto& fl : local) {
            flags.s11_infeasible |= fl.s11_infeasible;
            flags.s11_clamped |= fl.s11_clamped;
            flags.e11_clamped_low |= fl.e11_clamped_low;
            flags.e11_clamped_high |= fl.e11_clamped_high;
        }
    } else {
        for (std::size_t i = 0; i < grid.size(); ++i)
            trace[i] = eval_point(ctx, grid[i], cfg.kappa_s, cfg.kappa_e, &flags);
    }
    std::size_t min_idx = 0;
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i].rate < trace[min_idx].rate) min_idx = i;
    std::size_t grid_size = trace.size();
    if (grid_size > 1) refine_minimum(ctx, cfg, flags, trace, min_idx, grid_size);
    return finish_result(std::move(ctx), std::move(trace), cfg, flags);
}

}  // namespace

double rate_at_h(const ObservedStats& stats, const SourceSpec& spec, const ChannelParams& params,
                 const FluctuationPolicy& policy, double h_value, double kappa_s, double kappa_e) {
    EvalContext ctx = make_context(stats, spec, params, policy);
    ClampFlags flags;
    return eval_point(ctx, h_value, kappa_s, kappa_e, &flags).rate;
}

KeyRateResult worst_case_rate(const ObservedStats& stats, const SourceSpec& spec,
                              const ChannelParams& params, const FluctuationPolicy& policy,
                              const KeyRateConfig& cfg) {
    return worst_case_impl(stats, spec, params, policy, cfg, true);
}

KeyRateResult worst_case_rate_serial(const ObservedStats& stats, const SourceSpec& spec,
                                     const ChannelParams& params, const FluctuationPolicy& policy,
                                     KeyRateConfig cfg) {
    cfg.threads = 1;
    return worst_case_impl(stats, spec, params, policy, cfg, false);
}

KeyRateResult baseline_rate(const ObservedStats& stats, const SourceSpec& spec,
                            const ChannelParams& params, const FluctuationPolicy& policy,
                            RateMethod method, const KeyRateConfig& cfg) {
    if (method == RateMethod::this_work)
        throw ConfigError("baseline_rate expects a comparison method");
    EvalContext ctx = make_context(stats, spec, params, policy);
    ClampFlags flags;
    std::vector<TracePoint> trace;

    // Both comparison methods drop the shared-H coupling: the yield LP takes
    // its worst case with H floating inside the constraints, and the error
    // bound separately takes the smallest H the constraints allow.
    bool joints = method == RateMethod::joint_separate;
    YieldBound yb = s11_lower_bound_free(ctx.constraints, ctx.coeff, joints);
    double s11_worst = yb.infeasible ? 0.0 : yb.value;
    flags.s11_infeasible |= yb.infeasible;
    flags.s11_clamped |= yb.clamped;

    auto lower_of = [&](PairSource s) {
        return ctx.constraints.lower[static_cast<std::size_t>(static_cast<int>(s))];
    };
    double hi_oo = ctx.constraints.upper[static_cast<std::size_t>(static_cast<int>(PairSource::oo))];
    double a0 = ctx.coeff.a0;
    double h_for_error;
    if (joints) {
        double n_ox = static_cast<double>(ctx.constraints.pairs[static_cast<int>(PairSource::ox)]);
        h_for_error = std::max(0.0, a0 * ctx.constraints.ox_xo_min / n_ox - a0 * a0 * hi_oo);
    } else {
        h_for_error = std::max(
            0.0, a0 * (lower_of(PairSource::ox) + lower_of(PairSource::xo)) - a0 * a0 * hi_oo);
    }
    ErrorBound eb = e11_from_txx_upper(ctx.txx_bar, ctx.coeff, h_for_error, s11_worst);
    flags.e11_clamped_low |= eb.clamped_low;
    flags.e11_clamped_high |= eb.clamped_high;
    trace.push_back(
        {h_for_error, s11_worst, eb.value, rate_formula(ctx, s11_worst, eb.value, cfg.kappa_s, cfg.kappa_e)});
    return finish_result(std::move(ctx), std::move(trace), cfg, flags);
}

KeyRateResult evaluate_rate(const ObservedStats& stats, const SourceSpec& spec,
                            const ChannelParams& params, const FluctuationPolicy& policy,
                            RateMethod method, const KeyRateConfig& cfg) {
    if (method == RateMethod::this_work) return worst_case_rate(stats, spec, params, policy, cfg);
    return baseline_rate(stats, spec, params, policy, method, cfg);
}

}  // namespace qkd
