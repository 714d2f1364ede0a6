#include "tdlab/solver.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tdlab::solver {

using linalg::inf_norm;
using precond::SplitKind;

SolveTrace iterate(const precond::TdSystem& sys, const precond::Splitting& s,
                   double alpha, const Vector& v0, std::size_t max_iters, double tol) {
    if (alpha <= 0.0) throw InvalidArg("iterate: alpha must be positive");
    const std::size_t n = sys.h.rows();
    if (v0.size() != n) throw DimMismatch("iterate: v0 size mismatch");

    const Vector v_star = mdp::exact_value(sys.source).v_star;

    SolveTrace trace;
    trace.alpha = alpha;
    trace.splitting_kind = s.kind;

    Vector v = v0;
    double err = inf_norm(v - v_star);
    trace.errors.push_back(err);
    if (err <= tol) {
        trace.converged = true;
        return trace;
    }

    for (std::size_t t = 0; t < max_iters; ++t) {
        Vector g = sys.h * v - sys.r_eff;
        if (s.kind == SplitKind::Jacobi) {
            for (std::size_t i = 0; i < n; ++i) g[i] /= s.b(i, i);
        }
        for (std::size_t i = 0; i < n; ++i) v[i] -= alpha * g[i];

        err = inf_norm(v - v_star);
        trace.errors.push_back(err);
        trace.iterations = t + 1;
        if (err > 1e12) throw Diverged("iterate: error norm passed 1e12");
        if (err <= tol) {
            trace.converged = true;
            break;
        }
    }
    return trace;
}

double empirical_rate(const SolveTrace& trace, std::size_t burn_in) {
    if (trace.errors.empty()) throw InsufficientData("empirical_rate: empty trace");
    // last iteration still above the floating-point floor
    std::size_t last = trace.errors.size();
    while (last > 0 && trace.errors[last - 1] <= 1e-13) --last;
    if (last == 0) throw InsufficientData("empirical_rate: all errors at the floor");
    const std::size_t t_end = last - 1;
    if (t_end < burn_in + 10) {
        throw InsufficientData("empirical_rate: fewer than 10 usable iterations after burn-in");
    }
    double e_b = trace.errors[burn_in];
    double e_t = trace.errors[t_end];
    return std::pow(e_t / e_b, 1.0 / static_cast<double>(t_end - burn_in));
}

std::string trace_csv(const SolveTrace& trace) {
    std::ostringstream out;
    out << "iteration,error_inf_norm\n";
    char buf[32];
    for (std::size_t t = 0; t < trace.errors.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%.17g", trace.errors[t]);
        out << t << ',' << buf << '\n';
    }
    return out.str();
}

void save_trace(const SolveTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << trace_csv(trace);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace tdlab::solver
