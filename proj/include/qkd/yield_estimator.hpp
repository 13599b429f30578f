#pragma once

#include <array>
#include <cstdint>

#include "qkd/channel_model.hpp"
#include "qkd/fluctuation.hpp"
#include "qkd/photon_source.hpp"

namespace qkd {

// Photon-number coefficients entering the single-photon bounds. Unprimed:
// the x intensity; primed: the y intensity; a1z: the z single-photon weight.
// The symmetric setup makes Bob's coefficients equal to Alice's.
struct BoundCoefficients {
    double a0, a1, a2;
    double a0p, a1p, a2p;
    double a1z;
    double denominator;  // a1*a1p*(a1*a2p - a1p*a2), positive when mu_x < mu_y

    static BoundCoefficients from_spec(const SourceSpec& spec);
};

// Confidence region for the seven expectation variables v_lr, in
// kEstimationSources order: per-source boxes plus the joint count-space
// bounds that couple different sources.
struct MeanConstraints {
    std::array<double, 7> lower{}, upper{};
    std::array<std::int64_t, 7> pairs{};
    double yo_oy_min = 0.0;        // N_yo v_yo + N_oy v_oy >= .
    double xx_yo_oy_min = 0.0;     // N_xx v_xx + N_yo v_yo + N_oy v_oy >= .
    double yy_oo_max = 0.0;        // N_yy v_yy + N_oo v_oo <= .
    double ox_xo_min = 0.0;        // . <= N_xo v_xo + N_ox v_ox <= .
    double ox_xo_max = 0.0;

    bool contains(const std::array<double, 7>& v, double rel_tol = 1e-9) const;
};

// Range of the shared scalar H swept by the worst-case key-rate search.
struct HInterval {
    double h = 0.0;
    double delta = 0.0;
    double lo() const { return h - delta < 0.0 ? 0.0 : h - delta; }
    double hi() const { return h + delta; }
};

MeanConstraints build_constraints(const ObservedStats& stats, const FluctuationPolicy& policy,
                                  FailureLedger* ledger = nullptr);

HInterval h_interval(const ObservedStats& stats, const SourceSpec& spec,
                     const FluctuationPolicy& policy, FailureLedger* ledger = nullptr);

struct YieldBound {
    double value = 0.0;
    bool infeasible = false;  // requested H unreachable within the constraints
    bool clamped = false;     // raw optimum fell outside [0, 1]
};

// Worst-case (smallest) single-photon-pair yield consistent with the
// constraints and the fixed H, by linear programming.
YieldBound s11_lower_bound(const MeanConstraints& constraints, const BoundCoefficients& coeff,
                           double h_value);

// Variant with H unconstrained (folded into the objective); with_joints=false
// drops the coupling rows, leaving the per-source boxes only. Used by the
// comparison methods.
YieldBound s11_lower_bound_free(const MeanConstraints& constraints, const BoundCoefficients& coeff,
                                bool with_joints);

// The same bound evaluated directly at a specific mean vector, with H taken
// from the vector itself. Used as the algebraic cross-check of the LP.
double s11_formula(const BoundCoefficients& coeff, const std::array<double, 7>& v);

struct ErrorBound {
    double value = 0.0;
    bool clamped_low = false;
    bool clamped_high = false;
};

// Worst-case single-photon phase-flip error at the given H and yield bound.
ErrorBound e11_upper_bound(const ObservedStats& stats, const FluctuationPolicy& policy,
                           const BoundCoefficients& coeff, double h_value, double s11,
                           FailureLedger* ledger = nullptr);

// Upper confidence limit on the xx error yield; the H-independent piece of
// e11_upper_bound, computed once per evaluation.
double txx_upper(const ObservedStats& stats, const FluctuationPolicy& policy,
                 FailureLedger* ledger = nullptr);

ErrorBound e11_from_txx_upper(double txx_bar, const BoundCoefficients& coeff, double h_value,
                              double s11);

}  // namespace qkd

namespace qkd::lp {
struct Problem;
}

namespace qkd {

// The assembled LP for one H value, exposed for the audit dump.
lp::Problem s11_lp_problem(const MeanConstraints& constraints, const BoundCoefficients& coeff,
                           double h_value);

}  // namespace qkd
