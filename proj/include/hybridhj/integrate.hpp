// Fixed-step and step-doubling RK4 integration with cubic Hermite dense
// output, generic over the flattened state vector.
#pragma once

#include <functional>
#include <vector>

#include "hybridhj/types.hpp"

namespace hybridhj {

// Right-hand side of the flattened ODE x' = f(x).
using OdeField = std::function<Vec(const Vec&)>;

struct StepPolicy {
    double h = 1e-3;
    bool adaptive = false;
    double h_min = 1e-12;
    // Local error target per step for the adaptive controller.
    double adaptive_tol = 1e-10;
};

// Piecewise cubic Hermite interpolant on integration nodes. Exact at the
// nodes in both value and derivative; inside a step the interpolation error
// has the same h^4 order as the underlying RK4 solution.
class DenseOutput {
public:
    void reserve(std::size_t n);
    void append(double t, Vec x, Vec f);
    std::size_t size() const { return t_.size(); }
    bool empty() const { return t_.empty(); }
    double t_front() const { return t_.front(); }
    double t_back() const { return t_.back(); }
    double t_node(std::size_t i) const { return t_[i]; }
    const Vec& x_node(std::size_t i) const { return x_[i]; }

    // Evaluates at time t; clamps to the end intervals for |t - t_node| within
    // roundoff slack, otherwise throws Error for far out-of-range queries.
    Vec eval(double t) const;

private:
    std::size_t locate(double t) const;

    std::vector<double> t_;
    std::vector<Vec> x_;
    std::vector<Vec> f_;
};

struct IntegrationResult {
    std::vector<double> t;
    std::vector<Vec> x;
    DenseOutput dense;
};

// One classic RK4 step from (t, x) with step h.
Vec rk4_step(const OdeField& f, const Vec& x, double h);

// Integrates x' = f(x) from t0 to t_end (t_end >= t0). Fixed step h with a
// trimmed final step, or step-doubling adaptive control when
// policy.adaptive is set. Every accepted node lands in the dense output.
IntegrationResult integrate_ode(const OdeField& f, const Vec& x0, double t0, double t_end,
                                const StepPolicy& policy);

} // namespace hybridhj
