#include "qkd/yield_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qkd/errors.hpp"
#include "qkd/simplex.hpp"

namespace qkd {

namespace {

constexpr int kNumEstimation = 7;

int vidx(PairSource s) { return static_cast<int>(s); }  // kEstimationSources order

double count_of(const ObservedStats& stats, PairSource s) { return stats.at(s).detections; }

}  // namespace

BoundCoefficients BoundCoefficients::from_spec(const SourceSpec& spec) {
    require_valid(spec);
    auto px = poisson_coefficients(spec.mu_x, 2);
    auto py = poisson_coefficients(spec.mu_y, 2);
    auto pz = poisson_coefficients(spec.mu_z, 2);
    BoundCoefficients c{};
    c.a0 = px.coefficients[0];
    c.a1 = px.coefficients[1];
    c.a2 = px.coefficients[2];
    c.a0p = py.coefficients[0];
    c.a1p = py.coefficients[1];
    c.a2p = py.coefficients[2];
    c.a1z = pz.coefficients[1];
    c.denominator = c.a1 * c.a1p * (c.a1 * c.a2p - c.a1p * c.a2);
    if (!(c.denominator > 0.0))
        throw ConfigError("bound denominator not positive; needs mu_x < mu_y");
    return c;
}

bool MeanConstraints::contains(const std::array<double, 7>& v, double rel_tol) const {
    auto ge = [&](double lhs, double rhs) { return lhs >= rhs - rel_tol * (std::abs(rhs) + 1.0); };
    for (int i = 0; i < kNumEstimation; ++i)
        if (!ge(v[static_cast<std::size_t>(i)], lower[static_cast<std::size_t>(i)]) ||
            !ge(upper[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(i)]))
            return false;
    auto nv = [&](PairSource s) {
        return static_cast<double>(pairs[static_cast<std::size_t>(vidx(s))]) *
               v[static_cast<std::size_t>(vidx(s))];
    };
    if (!ge(nv(PairSource::yo) + nv(PairSource::oy), yo_oy_min)) return false;
    if (!ge(nv(PairSource::xx) + nv(PairSource::yo) + nv(PairSource::oy), xx_yo_oy_min)) return false;
    if (!ge(yy_oo_max, nv(PairSource::yy) + nv(PairSource::oo))) return false;
    double oxxo = nv(PairSource::ox) + nv(PairSource::xo);
    return ge(oxxo, ox_xo_min) && ge(ox_xo_max, oxxo);
}

MeanConstraints build_constraints(const ObservedStats& stats, const FluctuationPolicy& policy,
                                  FailureLedger* ledger) {
    stats.validate();
    MeanConstraints cons;
    const double eps1 = policy.one_sided_failure();
    for (int i = 0; i < kNumEstimation; ++i) {
        PairSource s = kEstimationSources[static_cast<std::size_t>(i)];
        const SourceTally& t = stats.at(s);
        MeanRange r = policy.mean_range(t.detections);
        double n = static_cast<double>(t.pairs);
        cons.lower[static_cast<std::size_t>(i)] = std::max(0.0, r.lower / n);
        cons.upper[static_cast<std::size_t>(i)] = std::min(1.0, r.upper / n);
        cons.pairs[static_cast<std::size_t>(i)] = t.pairs;
        if (ledger) ledger->add(std::string("box:") + to_string(s), 2.0 * eps1);
    }
    auto k = [&](PairSource s) { return count_of(stats, s); };
    cons.yo_oy_min = policy.mean_range(k(PairSource::yo) + k(PairSource::oy)).lower;
    cons.xx_yo_oy_min =
        policy.mean_range(k(PairSource::xx) + k(PairSource::yo) + k(PairSource::oy)).lower;
    cons.yy_oo_max = policy.mean_range(k(PairSource::yy) + k(PairSource::oo)).upper;
    MeanRange oxxo = policy.mean_range(k(PairSource::ox) + k(PairSource::xo));
    cons.ox_xo_min = oxxo.lower;
    cons.ox_xo_max = oxxo.upper;
    if (ledger) {
        ledger->add("joint:yo+oy:lower", eps1);
        ledger->add("joint:xx+yo+oy:lower", eps1);
        ledger->add("joint:yy+oo:upper", eps1);
        ledger->add("joint:ox+xo:lower", eps1);
        ledger->add("joint:ox+xo:upper", eps1);
    }
    return cons;
}

HInterval h_interval(const ObservedStats& stats, const SourceSpec& spec,
                     const FluctuationPolicy& policy, FailureLedger* ledger) {
    const SourceTally& ox = stats.at(PairSource::ox);
    const SourceTally& xo = stats.at(PairSource::xo);
    const SourceTally& oo = stats.at(PairSource::oo);
    if (ox.pairs != xo.pairs)
        throw ConfigError("h_interval requires the symmetric setup N_ox == N_xo");
    double a0 = std::exp(-spec.mu_x);
    double n_ox = static_cast<double>(ox.pairs);
    double n_oo = static_cast<double>(oo.pairs);

    double sum = ox.detections + xo.detections;
    // Count-space deviations. The normal policy keeps the closed form
    // gamma*sqrt(count) on both terms; the others take the conservative
    // sides of mean_range (larger on the sum, smaller on oo).
    double dev_sum, dev_oo;
    if (policy.kind() == FluctuationPolicy::Kind::normal) {
        dev_sum = policy.gamma() * std::sqrt(sum);
        dev_oo = policy.gamma() * std::sqrt(oo.detections);
    } else {
        MeanRange r_sum = policy.mean_range(sum);
        MeanRange r_oo = policy.mean_range(oo.detections);
        dev_sum = std::max(r_sum.upper - sum, sum - r_sum.lower);
        dev_oo = std::min(r_oo.upper - oo.detections, oo.detections - r_oo.lower);
    }

    HInterval iv;
    iv.h = a0 * (ox.detections / n_ox) + a0 * (xo.detections / n_ox) -
           a0 * a0 * (oo.detections / n_oo);
    iv.delta = std::max(0.0, a0 * dev_sum / n_ox - a0 * a0 * dev_oo / n_oo);
    if (ledger) {
        double eps1 = policy.one_sided_failure();
        ledger->add("h:ox+xo", 2.0 * eps1);
        ledger->add("h:oo", 2.0 * eps1);
    }
    return iv;
}

namespace {

// Objective coefficients of the yield LP over the seven means. The fixed H
// enters only through the constant term and the equality row.
std::array<double, 7> objective_coefficients(const BoundCoefficients& c) {
    std::array<double, 7> obj{};
    obj[static_cast<std::size_t>(vidx(PairSource::xx))] = c.a1p * c.a2p;
    obj[static_cast<std::size_t>(vidx(PairSource::oy))] = c.a1 * c.a2 * c.a0p;
    obj[static_cast<std::size_t>(vidx(PairSource::yo))] = c.a1 * c.a2 * c.a0p;
    obj[static_cast<std::size_t>(vidx(PairSource::yy))] = -c.a1 * c.a2;
    obj[static_cast<std::size_t>(vidx(PairSource::oo))] = -c.a1 * c.a2 * c.a0p * c.a0p;
    return obj;
}

lp::Problem assemble_lp(const MeanConstraints& cons, const BoundCoefficients& coeff,
                        double h_value, bool with_joints, bool with_h_equality) {
    lp::Problem p;
    std::array<double, 7> obj = objective_coefficients(coeff);
    p.objective.assign(obj.begin(), obj.end());
    p.offset = with_h_equality ? -coeff.a1p * coeff.a2p * h_value : 0.0;
    if (!with_h_equality) {
        // H free: fold its definition into the objective.
        p.objective[static_cast<std::size_t>(vidx(PairSource::ox))] -=
            coeff.a1p * coeff.a2p * coeff.a0;
        p.objective[static_cast<std::size_t>(vidx(PairSource::xo))] -=
            coeff.a1p * coeff.a2p * coeff.a0;
        p.objective[static_cast<std::size_t>(vidx(PairSource::oo))] +=
            coeff.a1p * coeff.a2p * coeff.a0 * coeff.a0;
    }
    p.lower.assign(cons.lower.begin(), cons.lower.end());
    p.upper.assign(cons.upper.begin(), cons.upper.end());

    auto n = [&](PairSource s) {
        return static_cast<double>(cons.pairs[static_cast<std::size_t>(vidx(s))]);
    };
    auto row = [&](std::initializer_list<std::pair<PairSource, double>> terms, lp::Relation rel,
                   double rhs) {
        lp::Row r;
        r.coeff.assign(kNumEstimation, 0.0);
        for (auto [s, c] : terms) r.coeff[static_cast<std::size_t>(vidx(s))] = c;
        r.rel = rel;
        r.rhs = rhs;
        p.rows.push_back(std::move(r));
    };
    if (with_joints) {
        row({{PairSource::yo, n(PairSource::yo)}, {PairSource::oy, n(PairSource::oy)}},
            lp::Relation::ge, cons.yo_oy_min);
        row({{PairSource::xx, n(PairSource::xx)},
             {PairSource::yo, n(PairSource::yo)},
             {PairSource::oy, n(PairSource::oy)}},
            lp::Relation::ge, cons.xx_yo_oy_min);
        row({{PairSource::yy, n(PairSource::yy)}, {PairSource::oo, n(PairSource::oo)}},
            lp::Relation::le, cons.yy_oo_max);
        row({{PairSource::xo, n(PairSource::xo)}, {PairSource::ox, n(PairSource::ox)}},
            lp::Relation::ge, cons.ox_xo_min);
        row({{PairSource::xo, n(PairSource::xo)}, {PairSource::ox, n(PairSource::ox)}},
            lp::Relation::le, cons.ox_xo_max);
    }
    if (with_h_equality) {
        row({{PairSource::ox, coeff.a0},
             {PairSource::xo, coeff.a0},
             {PairSource::oo, -coeff.a0 * coeff.a0}},
            lp::Relation::eq, h_value);
    }
    return p;
}

YieldBound run_yield_lp(const lp::Problem& p, const BoundCoefficients& coeff) {
    lp::Solution sol = lp::solve(p);
    YieldBound b;
    if (sol.status == lp::Status::infeasible) {
        b.infeasible = true;
        return b;
    }
    if (sol.status != lp::Status::optimal) throw NumericError("yield LP did not converge");
    double raw = sol.value / coeff.denominator;
    b.value = std::clamp(raw, 0.0, 1.0);
    b.clamped = raw != b.value;
    return b;
}

}  // namespace

YieldBound s11_lower_bound(const MeanConstraints& constraints, const BoundCoefficients& coeff,
                           double h_value) {
    return run_yield_lp(assemble_lp(constraints, coeff, h_value, true, true), coeff);
}

lp::Problem s11_lp_problem(const MeanConstraints& constraints, const BoundCoefficients& coeff,
                           double h_value) {
    return assemble_lp(constraints, coeff, h_value, true, true);
}

YieldBound s11_lower_bound_free(const MeanConstraints& constraints, const BoundCoefficients& coeff,
                                bool with_joints) {
    return run_yield_lp(assemble_lp(constraints, coeff, 0.0, with_joints, false), coeff);
}

double s11_formula(const BoundCoefficients& c, const std::array<double, 7>& v) {
    auto at = [&](PairSource s) { return v[static_cast<std::size_t>(vidx(s))]; };
    double h = c.a0 * at(PairSource::ox) + c.a0 * at(PairSource::xo) -
               c.a0 * c.a0 * at(PairSource::oo);
    double numerator = c.a1p * c.a2p * at(PairSource::xx) +
                       c.a1 * c.a2 * c.a0p * (at(PairSource::oy) + at(PairSource::yo)) -
                       c.a1 * c.a2 * at(PairSource::yy) -
                       c.a1 * c.a2 * c.a0p * c.a0p * at(PairSource::oo) - c.a1p * c.a2p * h;
    return numerator / c.denominator;
}

double txx_upper(const ObservedStats& stats, const FluctuationPolicy& policy,
                 FailureLedger* ledger) {
    const SourceTally& xx = stats.at(PairSource::xx);
    double upper = policy.mean_range(xx.errors).upper;
    if (ledger) ledger->add("error-yield:xx:upper", policy.one_sided_failure());
    return upper / static_cast<double>(xx.pairs);
}

ErrorBound e11_from_txx_upper(double txx_bar, const BoundCoefficients& coeff, double h_value,
                              double s11) {
    ErrorBound b;
    if (!(s11 > 0.0)) {
        b.value = 0.5;
        b.clamped_high = true;
        return b;
    }
    double raw = (txx_bar - h_value / 2.0) / (coeff.a1 * coeff.a1 * s11);
    b.value = std::clamp(raw, 0.0, 0.5);
    b.clamped_low = raw < 0.0;
    b.clamped_high = raw > 0.5;
    return b;
}

ErrorBound e11_upper_bound(const ObservedStats& stats, const FluctuationPolicy& policy,
                           const BoundCoefficients& coeff, double h_value, double s11,
                           FailureLedger* ledger) {
    return e11_from_txx_upper(txx_upper(stats, policy, ledger), coeff, h_value, s11);
}

}  // namespace qkd
