#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "poprec/channel.hpp"
#include "poprec/core.hpp"
#include "poprec/estimator.hpp"
#include "poprec/prony.hpp"
#include "poprec/zgrid.hpp"

namespace poprec {

/// The exhaustive distinguisher found nothing within the validation margin.
class MarginError : public RecoveryError {
public:
    using RecoveryError::RecoveryError;
};

/// How the absolute part of the moment-matching margin is chosen: eps/4, or
/// 3/(4M) with M a bound on |g_k|.
enum class MarginRule { EpsOverFour, ThreeOverFourM };

struct RecoveryConfig {
    // Evaluation grid. L = 0 means default_L(n, p).
    int L = 0;
    ArcWidth width_mode = ArcWidth::TwoPiOverL;
    int grid_points = 33;

    // Prony gate scale and error budget.
    double delta = PronyThresholds::kDefaultDelta;
    double eta = PronyThresholds::kDefaultEta;

    // Coefficient LP half-width and the filter on grid points: a point is
    // used only if point_z * (predicted sigma error) <= coeff_tol.
    double coeff_tol = 0.25;
    double point_z = 1.0;

    // (m1, m2) enumeration. With alpha_known, m1 is fixed to round(log2(1/alpha)).
    std::optional<double> alpha_known;
    int m_slack = 1;
    int m_cap = 12;

    // Validation: |fit - estimate| <= margin_abs + noise_z * stderr, per component.
    double noise_z = 5.0;
    MarginRule margin_rule = MarginRule::EpsOverFour;
    double magnitude_bound = 0.0;  // M for ThreeOverFourM; 0 means n^{2l-1}

    // Sampling.
    std::size_t sample_count = 100000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    double subsample_budget = 0.5;

    double margin_abs(const ProblemParams& params) const;
};

nlohmann::json config_to_json(const RecoveryConfig& c);
RecoveryConfig config_from_json(const nlohmann::json& j);

struct CandidateEnumeration {
    int ell_prime = 0;
    int m1 = 0;
    int m2 = 0;

    bool operator==(const CandidateEnumeration&) const = default;
};

struct SupportCandidate {
    CandidateEnumeration enumeration;
    std::vector<BitString> support;
};

/// One (l', m1, m2) attempt of the support pipeline.
struct CandidateRecord {
    CandidateEnumeration enumeration;
    std::string outcome;  // "ok", "duplicate" or the failure message
    int usable_points = 0;
    std::vector<std::string> support;

    bool operator==(const CandidateRecord&) const = default;
};

struct ResidualEntry {
    int k = 0;
    Complex estimate;
    Complex fitted;
    double residual = 0.0;  // max(|Re diff|, |Im diff|)

    bool operator==(const ResidualEntry&) const = default;
};

struct PointDiagnostics {
    GridPoint point;
    bool usable = true;
    int gate_yes = 0;
    int gate_total = 0;
    std::vector<ResidualEntry> by_k;

    bool operator==(const PointDiagnostics&) const = default;
};

struct Diagnostics {
    std::size_t sample_count = 0;
    int k_max = 0;
    bool small_p = false;
    int threshold_t = 0;
    double effective_p = 0.0;
    double fit_tau = 0.0;
    double validation_ratio = 0.0;
    int selected = -1;  // index into candidates
    std::vector<CandidateRecord> candidates;
    std::vector<PointDiagnostics> points;

    bool operator==(const Diagnostics&) const = default;
};

struct RecoveryResult {
    SparseDistribution distribution;
    Diagnostics diagnostics;
    std::uint64_t seed = 0;
    RecoveryConfig config;
};

/// Arc grid for the given problem and config.
std::vector<GridPoint> recovery_grid(const ProblemParams& params, const RecoveryConfig& config);

/// Runs Prony, coefficient recovery and factoring for every enumerated
/// (l', m1, m2) and returns the distinct supports found, l' ascending.
/// Throws RecoveryError if none succeeds.
std::vector<SupportCandidate> recover_support_candidates(const MomentEstimates& estimates,
                                                         const ProblemParams& params,
                                                         std::optional<double> alpha_known,
                                                         const RecoveryConfig& config = {},
                                                         std::vector<CandidateRecord>* log = nullptr);

struct WeightFit {
    std::vector<double> weights;
    double tau = 0.0;  // max residual (scaled residual when standardized)
};

/// Minimax fit of mixture weights to every usable moment (k >= 1). With
/// `standardized`, residuals are divided by margin_abs + noise_z * stderr.
std::optional<WeightFit> minimax_weights(const std::vector<BitString>& support, const MomentEstimates& estimates,
                                         bool standardized = false, double margin_abs = 0.0,
                                         double noise_z = 0.0);

/// Weights with every |Re/Im residual| <= tol, or nothing.
std::optional<std::vector<double>> fit_weights(const std::vector<BitString>& support,
                                               const MomentEstimates& estimates, double tol);

/// Largest ratio |fit - estimate| / (margin_abs + noise_z * stderr) over usable (z, k >= 1).
double validation_ratio(const SparseDistribution& d, const MomentEstimates& estimates, double margin_abs,
                        double noise_z);

/// Full pipeline from moment estimates.
RecoveryResult recover_from_moments(const MomentEstimates& estimates, const ProblemParams& params,
                                    const RecoveryConfig& config);

/// Full pipeline from traces: small-p reduction if p < n^{-1/2}/2, moment
/// accumulation, candidate supports, weight fit, validation.
RecoveryResult recover(const TraceSource& source, const ProblemParams& params, const RecoveryConfig& config);

/// Brute force over supports of size <= l and weights on a grid of the given
/// pitch; returns the candidate with the smallest validation ratio, if <= 1.
/// Throws MarginError otherwise. Needs n <= 8 and l <= 2.
SparseDistribution exhaustive_distinguisher(const MomentEstimates& estimates, const ProblemParams& params,
                                            double weight_grid, double margin_abs, double noise_z = 0.0);

}  // namespace poprec
