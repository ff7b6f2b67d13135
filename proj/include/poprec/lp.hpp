#pragma once

#include <limits>
#include <string>
#include <vector>

namespace poprec {

/// Dense linear program
///   minimize c.x  subject to  lower <= x <= upper,  row_lo <= A x <= row_hi.
/// Lower bounds must be finite; any other bound may be infinite. An empty
/// objective means pure feasibility.
struct LinearProgram {
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    struct Row {
        std::vector<double> a;
        double lo = -kInf;
        double hi = kInf;
    };

    int num_vars = 0;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<Row> rows;
    std::vector<double> objective;

    explicit LinearProgram(int vars = 0);

    void add_row(std::vector<double> a, double lo, double hi);
    /// lo <= a.x <= hi written as |a.x - center| <= radius.
    void add_band(std::vector<double> a, double center, double radius) {
        add_row(std::move(a), center - radius, center + radius);
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string to_string(LpStatus s);

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    /// Phase-one optimum (total artificial mass after row scaling).
    double infeasibility = 0.0;
    /// Largest bound or row violation of x (0 when status != Optimal).
    double max_violation = 0.0;
    int iterations = 0;
};

/// Two-phase tableau simplex with Dantzig pricing and lowest-index
/// tie-breaks; falls back to Bland's rule after a run of degenerate pivots.
/// Deterministic. Throws ParameterError on malformed input.
LpResult solve_lp(const LinearProgram& lp);

/// Phase-one tolerance used to call a program feasible.
inline constexpr double kFeasibilityTolerance = 1e-9;

bool lp_feasible(const LinearProgram& lp);

}  // namespace poprec
