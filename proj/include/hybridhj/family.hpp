// Parameterized families of one-forms per region, with parameter transfer
// across impacts: the data every HJ check and reconstruction acts on.
#pragma once

#include <functional>
#include <vector>

#include "hybridhj/types.hpp"

namespace hybridhj {

struct Region {
    int id = 0;
    std::function<bool(const BasePoint&)> contains;
};

// Family gamma_k(q; lambda) of one-forms over regions U_k. The parameter
// vector may carry trailing discrete components (branch signs, +-1) beyond
// param_dim; Jacobians differentiate only the leading param_dim entries.
struct SolutionFamily {
    std::vector<Region> regions;
    int param_dim = 0;
    std::function<Covector(int region, const BasePoint&, const Vec& lambda)> gamma;
    // Optional analytic Jacobians; entry (i, j) is d(gamma_i)/d(q_j) resp.
    // d(gamma_i)/d(lambda_j). Verification falls back to central differences
    // (and a wider pass tolerance) when these are absent.
    std::function<Mat(int region, const BasePoint&, const Vec& lambda)> dgamma_dq;
    std::function<Mat(int region, const BasePoint&, const Vec& lambda)> dgamma_dlambda;

    const Region& region(int id) const;
};

// Closed-form parameter update across an impact, lambda' = tau(lambda) for a
// crossing at base point q from region k to region l. Throws
// TransferUndefined where the scenario's matching equations are inconsistent.
struct TransferMap {
    std::function<Vec(int from_region, int to_region, const BasePoint& q, const Vec& lambda)> tau;
};

// Finite-difference Jacobians of gamma, used when the family carries no
// analytic ones. Central differences with step tol.fd_step.
Mat fd_dgamma_dq(const SolutionFamily& family, int region, const BasePoint& q, const Vec& lambda,
                 const Tolerances& tol = {});
Mat fd_dgamma_dlambda(const SolutionFamily& family, int region, const BasePoint& q,
                      const Vec& lambda, const Tolerances& tol = {});

} // namespace hybridhj
