#pragma once

#include <span>
#include <vector>

#include "dcrm/crm.hpp"
#include "dcrm/freq_model.hpp"
#include "dcrm/severity_model.hpp"

namespace dcrm {
namespace oracle {

// Brute-force verification engines. These deliberately avoid the closed-form
// filtering recursions for the posterior laws: the beta-innovation transition
// densities are propagated numerically (quadrature) or by sampling
// (particles), and Bayes updates are applied pointwise.

struct GridPosterior {
    std::vector<double> theta;  // log-spaced support points
    std::vector<double> weight; // normalized cell masses
    double mean = 0.0;
    double variance = 0.0;
    // log of the unnormalized posterior mass, i.e. the joint density of the
    // observations up to this period (the filter never renormalizes between
    // steps)
    double log_joint = 0.0;
};

struct GridConfig {
    int n = 4097; // grid points (forced odd for the Simpson moment rule)
    double tail_mass = 1e-9; // bound on the extrapolated truncated tails
    int max_refine = 8;      // range widenings before giving up
};

/// Count-model quadrature filter: per-period posterior of theta after each
/// observation.
std::vector<GridPosterior> quadrature_filter_freq(const FreqParams& params,
                                                  std::span<const long long> counts,
                                                  const GridConfig& cfg = {});

/// Severity-model quadrature filter.
std::vector<GridPosterior> quadrature_filter_sev(const SevParams& params,
                                                 std::span<const double> ys,
                                                 const GridConfig& cfg = {});

struct CrmGridResult {
    std::vector<GridPosterior> freq;
    std::vector<GridPosterior> sev;
};

/// Joint-model quadrature filter over both random-effect chains.
CrmGridResult quadrature_filter(std::span<const Period> history, const CrmParams& params,
                                const GridConfig& cfg = {});

struct PfEstimate {
    double mean = 0.0;
    double mean_se = 0.0;
    double variance = 0.0;
    double ess = 0.0;
};

struct PfResult {
    std::vector<PfEstimate> freq;
    std::vector<PfEstimate> sev;
};

/// Bootstrap particle filter for the joint model.
PfResult particle_filter(std::span<const Period> history, const CrmParams& params,
                         int n_particles, Rng& rng);

struct TransitionCheck {
    double mean = 0.0;
    double mean_se = 0.0;
    double variance = 0.0;
    double variance_se = 0.0;
};

/// Monte-Carlo check of the beta-thinning transition applied to a gamma
/// state law.
TransitionCheck transition_check_gamma(const Gamma& law, double q, int n_draws, Rng& rng);

/// Monte-Carlo check of the beta-division transition applied to an
/// inverse-gamma state law under the given schedule.
TransitionCheck transition_check_ig(const InverseGamma& law, const QSchedule& schedule,
                                    int n_draws, Rng& rng);

} // namespace oracle
} // namespace dcrm
