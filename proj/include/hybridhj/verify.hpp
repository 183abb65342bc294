// Numerical verification of candidate HJ solutions: per-region residuals for
// the three equation variants, reset-relatedness at impact points, and
// completeness (local diffeomorphism + parameter transfer) checks.
#pragma once

#include <string>
#include <vector>

#include "hybridhj/family.hpp"
#include "hybridhj/hybrid.hpp"

namespace hybridhj {

struct ResidualChannel {
    std::string name;
    double max = 0.0;
    BasePoint argmax;
    double extra = 0.0; // channel-specific scalar (e.g. the estimated energy level)
};

struct ResidualReport {
    double max_residual = 0.0;
    BasePoint argmax;
    int sample_count = 0;
    std::vector<ResidualChannel> channels;
    bool analytic_jacobians = false;
    double pass_tol = 0.0;

    bool passes() const { return max_residual <= pass_tol; }
    const ResidualChannel* channel(const std::string& name) const;
};

// Gradient residual max|grad_q H(q, gamma(q; lambda))| plus the closedness
// defect max_{i<j}|dgamma_i/dq_j - dgamma_j/dq_i| over the samples.
// Samples must lie in region k (RegionViolation otherwise).
ResidualReport residual_conservative(const DynamicsModel& model, const SolutionFamily& family,
                                     int k, const Vec& lambda,
                                     const std::vector<BasePoint>& samples,
                                     const Tolerances& tol = {});

// Forced variant: residual component j is grad_q[H(q,gamma(q))]_j +
// F_j(q, gamma(q)) (the pullback of the semibasic force).
ResidualReport residual_forced(const DynamicsModel& model, const SolutionFamily& family, int k,
                               const Vec& lambda, const std::vector<BasePoint>& samples,
                               const Tolerances& tol = {});

// Constrained variant, three channels: energy |H(q,gamma(q)) - E| against the
// sample-mean level E, constraint-membership residual of (q, gamma(q)), and
// anisotropic closedness max |dgamma(v,w)| over orthonormal basis pairs of
// the constraint distribution at q.
ResidualReport residual_nonholonomic(const DynamicsModel& model, const SolutionFamily& family,
                                     int k, const Vec& lambda,
                                     const std::vector<BasePoint>& samples,
                                     const Tolerances& tol = {});

struct ImpactSample {
    BasePoint q;
    int from_region = 0;
    int to_region = 0;
};

// Reset-relatedness residual: max over impact samples and parameter values of
// |gamma_l(q; tau(lambda)) - momentum part of reset(q, gamma_k(q; lambda))|.
// Throws TransferUndefined where tau has no value.
ResidualReport delta_relatedness_check(const HybridSystemSpec& spec, const SolutionFamily& family,
                                       const TransferMap& transfer,
                                       const std::vector<ImpactSample>& impact_samples,
                                       const std::vector<Vec>& lambdas,
                                       const Tolerances& tol = {});

struct RegionSample {
    int region = 0;
    BasePoint q;
};

struct SampleGrid {
    std::vector<RegionSample> interior;
    std::vector<ImpactSample> impacts;
    std::vector<Vec> lambdas;
};

struct CompletenessReport {
    bool diffeo_ok = false;
    double min_abs_det = 0.0;
    RegionSample diffeo_argmin;
    std::vector<int> momentum_coords; // restriction used at the argmin sample
    bool transfer_defined = false;
    std::string transfer_error;
    double transfer_residual = 0.0;
    double diffeo_tol = 0.0;
    double pass_tol = 0.0;

    bool passes() const {
        return diffeo_ok && transfer_defined && transfer_residual <= pass_tol;
    }
};

// Completeness: (a) |det d(gamma)/d(lambda)| > diffeo_tol at every interior
// grid point, restricted to param_dim momentum coordinates (chosen by pivoted
// selection from the constraint null space for constrained models); (b) the
// reset-relatedness residual over the grid's impact samples. TransferUndefined
// is captured in the report, not thrown.
CompletenessReport complete_solution_check(const HybridSystemSpec& spec,
                                           const SolutionFamily& family,
                                           const TransferMap& transfer, const SampleGrid& grid,
                                           const Tolerances& tol = {});

// Orthonormal basis of ker mu(q) (columns), via SVD of the constraint rows.
Mat constraint_null_basis(const DynamicsModel& model, const BasePoint& q,
                          const Tolerances& tol = {});

// Greedy pivot selection of m row indices of the (n x m) null-space basis,
// used to restrict momentum coordinates in the diffeomorphism channel.
std::vector<int> select_momentum_coords(const Mat& null_basis);

} // namespace hybridhj
