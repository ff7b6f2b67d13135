#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "poprec/core.hpp"
#include "poprec/estimator.hpp"

namespace poprec {

/// The gate passed but the Hankel matrix is still numerically singular.
class InconsistencyError : public RecoveryError {
public:
    using RecoveryError::RecoveryError;
};

/// B(i,j) = b_{i+j} and v(i) = b_{l'+i} (0-based) for power sums b_0..b_{2l'-1}.
struct HankelSystem {
    Eigen::MatrixXcd B;
    Eigen::VectorXcd v;
    int ell_prime = 0;

    static HankelSystem from_moments(std::span<const Complex> b, int ell_prime);
};

class PronyThresholds {
public:
    static constexpr double kDefaultDelta = 1e-6;
    static constexpr double kDefaultEta = 1e-4;

    PronyThresholds(double alpha, double beta, double delta = kDefaultDelta, double eta = kDefaultEta);

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double delta() const noexcept { return delta_; }
    double gamma() const noexcept { return delta_ * delta_; }
    double eta() const noexcept { return eta_; }

private:
    double alpha_, beta_, delta_, eta_;
};

/// exp(-4 C n^{1/3} (ln n)^{2/3} l^2 p^{-2/3}); underflows to 0 for most inputs.
double theoretical_delta(int n, int ell, double p, double C = 1.0);

enum class GateResult { Yes, NoSingular, NoDet };

/// "yes", "no:singular" or "no:det".
std::string to_string(GateResult g);
GateResult gate_from_string(const std::string& s);

double smallest_singular_value(const Eigen::MatrixXcd& m);

/// NoSingular if sigma_min(B) < (3/4) alpha delta, else NoDet if
/// |det B| < beta delta^2 / 2, else Yes.
GateResult conditioning_gate(const HankelSystem& sys, const PronyThresholds& th);

/// w = B^{-1} v by full-pivot LU. Throws InconsistencyError when B is rank deficient.
Eigen::VectorXcd solve_hankel(const HankelSystem& sys);

/// sigma_j = (-1)^{j-1} w_{l'+1-j} for j = 1..l'.
std::vector<Complex> sigma_from_w(const Eigen::VectorXcd& w);

/// Gate-independent solve returning sigma_1..sigma_{l'}.
std::vector<Complex> solve_sigma(const HankelSystem& sys, const PronyThresholds& th);

/// max_k |b_{k+l'} - sum_j r_j b_{k+l'-j}| for 0 <= k < l'.
double recurrence_check(std::span<const Complex> b, std::span<const Complex> r);

struct SigmaRecord {
    GridPoint point;
    int ell_prime = 0;
    GateResult gate = GateResult::NoSingular;
    std::vector<Complex> sigma;  // empty unless gate == Yes
    /// First-order bound on |sigma error| from one standard error of the moments:
    /// ||B^{-1}|| (||e|| + ||E|| ||w||).
    double noise_scale = 0.0;
};

/// Runs the gate at one grid point and solves when it passes. Throws
/// ParameterError if the point lacks moments up to k = 2 l' - 1.
SigmaRecord estimate_sigma_at_point(const MomentEstimates& est, std::size_t z_index, int ell_prime,
                                    const PronyThresholds& th);

nlohmann::json sigma_record_to_json(const SigmaRecord& r);
SigmaRecord sigma_record_from_json(const nlohmann::json& j);

}  // namespace poprec
