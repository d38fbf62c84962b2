#include "dcrm/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dcrm/error.hpp"
#include "dcrm/parallel.hpp"

namespace dcrm {

std::vector<std::string> Portfolio::design_names() const {
    std::vector<std::string> names;
    if (schema.add_intercept) names.push_back("(Intercept)");
    names.insert(names.end(), schema.covariates.begin(), schema.covariates.end());
    return names;
}

std::vector<PolicySeries> Portfolio::series_before(int cutoff_year) const {
    std::vector<PolicySeries> out;
    out.reserve(policies.size());
    for (const PolicyHistory& ph : policies) {
        PolicySeries s;
        for (const PolicyPeriod& pp : ph.periods) {
            if (cutoff_year != 0 && pp.year >= cutoff_year) continue;
            s.push_back(Period{pp.x, pp.y1, pp.y2});
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, long line) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw data_error("malformed numeric value '" + s + "'", line);
    }
}

long long parse_count(const std::string& s, long line) {
    try {
        size_t pos = 0;
        long long v = std::stoll(s, &pos);
        if (pos != s.size() || v < 0) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw data_error("malformed claim count '" + s + "'", line);
    }
}

} // namespace

Portfolio ingest(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);

    std::string header;
    if (!std::getline(in, header)) throw data_error("empty file: " + path);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    std::vector<std::string> cols = split_csv_line(header);

    std::vector<std::string> expected = {"policy_id", "year"};
    expected.insert(expected.end(), schema.covariates.begin(), schema.covariates.end());
    expected.push_back("claim_count");
    expected.push_back("total_loss");
    if (cols != expected) {
        std::string want;
        for (const auto& c : expected) want += (want.empty() ? "" : ",") + c;
        throw data_error("header mismatch; expected: " + want, 1);
    }

    Portfolio portfolio;
    portfolio.schema = schema;
    std::map<std::string, std::size_t> index;
    std::set<std::pair<std::string, int>> seen;

    std::string line;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f = split_csv_line(line);
        if (f.size() != cols.size())
            throw data_error("expected " + std::to_string(cols.size()) + " fields, got " +
                                 std::to_string(f.size()),
                             line_no);
        PolicyPeriod pp;
        std::string id = f[0];
        pp.year = static_cast<int>(parse_count(f[1], line_no));
        if (schema.add_intercept) pp.x.push_back(1.0);
        for (size_t c = 0; c < schema.covariates.size(); ++c) {
            if (f[2 + c].empty()) throw data_error("missing covariate " + schema.covariates[c], line_no);
            pp.x.push_back(parse_double(f[2 + c], line_no));
        }
        pp.y1 = parse_count(f[2 + schema.covariates.size()], line_no);
        pp.y2 = parse_double(f[3 + schema.covariates.size()], line_no);
        if (pp.y2 < 0.0) throw data_error("negative total_loss", line_no);
        if (pp.y1 == 0 && pp.y2 > 0.0)
            throw data_error("positive loss with zero claim count", line_no);
        if (pp.y1 >= 1 && pp.y2 == 0.0)
            throw data_error("zero loss with positive claim count", line_no);

        if (!seen.insert({id, pp.year}).second)
            throw data_error("duplicate (policy_id, year) = (" + id + ", " +
                                 std::to_string(pp.year) + ")",
                             line_no);
        auto [it, inserted] = index.try_emplace(id, portfolio.policies.size());
        if (inserted) portfolio.policies.push_back(PolicyHistory{id, {}});
        portfolio.policies[it->second].periods.push_back(std::move(pp));
    }

    for (PolicyHistory& ph : portfolio.policies) {
        bool sorted = std::is_sorted(ph.periods.begin(), ph.periods.end(),
                                     [](const auto& a, const auto& b) { return a.year < b.year; });
        if (!sorted) {
            std::sort(ph.periods.begin(), ph.periods.end(),
                      [](const auto& a, const auto& b) { return a.year < b.year; });
            portfolio.warnings.push_back("policy " + ph.id + ": years out of order, re-sorted");
        }
    }
    return portfolio;
}

std::vector<PolicyPremium> predict_portfolio(const Portfolio& portfolio,
                                             const CrmParams& params, Benchmark benchmark,
                                             int target_year, int threads) {
    std::vector<PolicyPremium> out(portfolio.policies.size());
    parallel_for(portfolio.policies.size(), threads, [&](std::size_t i) {
        const PolicyHistory& ph = portfolio.policies[i];
        PolicyPremium pr;
        pr.id = ph.id;
        pr.year = target_year;

        // covariates of the target year if present, else the last observed row
        const PolicyPeriod* target = nullptr;
        const PolicyPeriod* last = nullptr;
        for (const PolicyPeriod& pp : ph.periods) {
            if (pp.year == target_year) target = &pp;
            if (pp.year < target_year && (!last || pp.year > last->year)) last = &pp;
        }
        const std::vector<double>& x_tau = target ? target->x : (last ? last->x : ph.periods.front().x);
        Rates r = rates(params, x_tau);

        if (benchmark == Benchmark::Naive || benchmark == Benchmark::Dglm) {
            double eta = benchmark == Benchmark::Naive ? 0.0 : params.eta;
            pr.freq_mean = r.lambda1;
            pr.premium = r.lambda1 * r.lambda2_star *
                         std::exp(r.lambda1 * (std::exp(eta) - 1.0) + eta);
            pr.sev_mean = pr.premium;
            pr.multiplier_uncapped = 1.0;
            pr.multiplier = 1.0;
            out[i] = std::move(pr);
            return;
        }

        CrmState state = initial_state(params);
        for (const PolicyPeriod& pp : ph.periods) {
            if (pp.year >= target_year) continue;
            state = update(state, params, pp.x, Period{pp.x, pp.y1, pp.y2});
        }
        Premium pm = premium(state, params, x_tau);
        pr.freq_mean = pm.freq_mean;
        pr.sev_mean = pm.sev_mean;
        pr.multiplier_uncapped = pm.credibility_freq * pm.credibility_sev;
        pr.multiplier = std::min(pr.multiplier_uncapped, kCredibilityCap);
        // capping scales the posterior premium down; it never raises it
        pr.premium = pm.sev_mean * (pr.multiplier / pr.multiplier_uncapped);
        out[i] = std::move(pr);
    });
    return out;
}

ValidationReport validate(const Portfolio& portfolio,
                          const std::vector<PolicyPremium>& premiums, int target_year) {
    std::map<std::string, double> actual;
    for (const PolicyHistory& ph : portfolio.policies)
        for (const PolicyPeriod& pp : ph.periods)
            if (pp.year == target_year) actual[ph.id] = pp.y2;
    if (actual.empty())
        throw data_error("no observations for hold-out year " + std::to_string(target_year));

    ValidationReport rep;
    double se = 0.0, ae = 0.0, pm = 0.0, am = 0.0;
    for (const PolicyPremium& pr : premiums) {
        auto it = actual.find(pr.id);
        if (it == actual.end()) continue;
        double err = it->second - pr.premium;
        se += err * err;
        ae += std::fabs(err);
        pm += pr.premium;
        am += it->second;
        ++rep.n;
    }
    if (rep.n == 0) throw data_error("no predictions overlap the hold-out year");
    rep.rmse = std::sqrt(se / static_cast<double>(rep.n));
    rep.mae = ae / static_cast<double>(rep.n);
    rep.predicted_mean = pm / static_cast<double>(rep.n);
    rep.actual_mean = am / static_cast<double>(rep.n);
    return rep;
}

} // namespace dcrm
