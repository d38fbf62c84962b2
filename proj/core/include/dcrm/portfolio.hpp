#pragma once

#include <string>
#include <vector>

#include "dcrm/crm.hpp"
#include "dcrm/fit.hpp"

namespace dcrm {

// Longitudinal CSV ingestion, per-policy filtering, capped premium
// prediction, and hold-out validation.

struct Schema {
    std::vector<std::string> covariates; // column names entering the design
    bool add_intercept = true;
    int holdout_year = 0; // periods with year >= holdout_year are excluded from fitting
};

struct PolicyPeriod {
    int year = 0;
    std::vector<double> x; // resolved design row (intercept first when configured)
    long long y1 = 0;
    double y2 = 0.0;
};

struct PolicyHistory {
    std::string id;
    std::vector<PolicyPeriod> periods; // strictly increasing years
};

struct Portfolio {
    Schema schema;
    std::vector<PolicyHistory> policies;
    std::vector<std::string> warnings;

    /// Covariate names as they appear in the design (with intercept).
    std::vector<std::string> design_names() const;

    /// Per-policy series of periods with year < cutoff (all when cutoff == 0).
    std::vector<PolicySeries> series_before(int cutoff_year) const;
};

/// CSV layout: policy_id,year,<covariates...>,claim_count,total_loss.
Portfolio ingest(const std::string& path, const Schema& schema);

struct PolicyPremium {
    std::string id;
    int year = 0;
    double freq_mean = 0.0;
    double sev_mean = 0.0;
    double multiplier_uncapped = 1.0;
    double multiplier = 1.0;
    double premium = 0.0;
};

/// Premium cap applied to the product credibility multiplier.
inline constexpr double kCredibilityCap = 2.5;

/// Filter each policy through the years before `target_year`, then price the
/// target year. Naive and DGLM use their closed-form compound means; Static
/// and Proposed use the filtered posterior premium with the multiplier cap.
std::vector<PolicyPremium> predict_portfolio(const Portfolio& portfolio,
                                             const CrmParams& params, Benchmark benchmark,
                                             int target_year, int threads = 1);

struct ValidationReport {
    double rmse = 0.0;
    double mae = 0.0;
    double predicted_mean = 0.0;
    double actual_mean = 0.0;
    std::size_t n = 0;
};

ValidationReport validate(const Portfolio& portfolio,
                          const std::vector<PolicyPremium>& premiums, int target_year);

} // namespace dcrm
