#include "tabdistill/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "tabdistill/numerics/log.hpp"

namespace tabdistill::eval {

namespace {

std::string format_pair(double a, double b) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "A_F = %.17g, A_R10 = %.17g", a, b);
    return buf;
}

struct Grouped {
    std::vector<std::string> competitors;
    std::vector<std::vector<double>> rows;  // per usable group, values by competitor index
    std::size_t skipped = 0;
};

Grouped group_observations(std::span<const Observation> obs) {
    std::set<std::string> names;
    for (const auto& o : obs) names.insert(o.competitor);
    Grouped g;
    g.competitors.assign(names.begin(), names.end());
    std::map<std::string, std::vector<std::pair<std::size_t, double>>> by_group;
    for (const auto& o : obs) {
        const auto idx = static_cast<std::size_t>(
            std::lower_bound(g.competitors.begin(), g.competitors.end(), o.competitor) - g.competitors.begin());
        by_group[o.group].push_back({idx, o.value});
    }
    for (const auto& [key, entries] : by_group) {
        std::vector<double> row(g.competitors.size(), std::nan(""));
        std::vector<int> seen(g.competitors.size(), 0);
        for (const auto& [idx, v] : entries) {
            row[idx] = v;
            ++seen[idx];
        }
        if (std::any_of(seen.begin(), seen.end(), [](int s) { return s != 1; })) {
            log_warning("ranking: skipping group '" + key + "' without exactly one entry per competitor");
            ++g.skipped;
            continue;
        }
        g.rows.push_back(std::move(row));
    }
    if (g.rows.empty()) throw ContractError("ranking: no complete comparison group");
    return g;
}

}  // namespace

nlohmann::json RunRecord::to_json() const {
    return {{"dataset", dataset},
            {"encoder", encoder},
            {"method", method},
            {"space", space},
            {"variant", variant},
            {"representation", representation},
            {"ipc", ipc},
            {"seed", seed},
            {"classifier", classifier},
            {"balanced_accuracy", balanced_accuracy},
            {"seconds", seconds},
            {"stage_seconds", stage_seconds},
            {"plan_hash", plan_hash},
            {"status", status},
            {"failed_stage", failed_stage},
            {"message", message}};
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
    RunRecord r;
    j.at("dataset").get_to(r.dataset);
    j.at("encoder").get_to(r.encoder);
    j.at("method").get_to(r.method);
    j.at("space").get_to(r.space);
    j.at("variant").get_to(r.variant);
    j.at("representation").get_to(r.representation);
    j.at("ipc").get_to(r.ipc);
    j.at("seed").get_to(r.seed);
    j.at("classifier").get_to(r.classifier);
    j.at("balanced_accuracy").get_to(r.balanced_accuracy);
    r.seconds = j.value("seconds", 0.0);
    r.stage_seconds = j.value("stage_seconds", std::map<std::string, double>{});
    r.plan_hash = j.value("plan_hash", "");
    r.status = j.value("status", "ok");
    r.failed_stage = j.value("failed_stage", "");
    r.message = j.value("message", "");
    if (r.status != "ok" && r.status != "failed") throw ContractError("run record: unknown status '" + r.status + "'");
    if (!(r.balanced_accuracy >= 0.0 && r.balanced_accuracy <= 1.0))
        throw ContractError("run record: balanced accuracy outside [0, 1]");
    return r;
}

UndefinedRegretError::UndefinedRegretError(double f, double r)
    : ContractError("relative regret undefined: " + format_pair(f, r)), full(f), random10(r) {}

double relative_regret(const Baseline& b, double accuracy) {
    if (b.full == b.random10) throw UndefinedRegretError(b.full, b.random10);
    return (b.full - accuracy) / (b.full - b.random10);
}

void RegretContext::set(const std::string& dataset, const std::string& classifier, Baseline b) {
    if (!(b.full >= 0.0 && b.full <= 1.0 && b.random10 >= 0.0 && b.random10 <= 1.0))
        throw ContractError("baseline accuracies must lie in [0, 1]");
    entries_[{dataset, classifier}] = b;
}

bool RegretContext::contains(const std::string& dataset, const std::string& classifier) const {
    return entries_.count({dataset, classifier}) > 0;
}

const Baseline& RegretContext::at(const std::string& dataset, const std::string& classifier) const {
    const auto it = entries_.find({dataset, classifier});
    if (it == entries_.end())
        throw ContractError("no baseline for dataset '" + dataset + "' and classifier '" + classifier + "'");
    return it->second;
}

double RegretContext::regret(const std::string& dataset, const std::string& classifier, double accuracy) const {
    return relative_regret(at(dataset, classifier), accuracy);
}

RankTable mean_rank(std::span<const Observation> observations) {
    const Grouped g = group_observations(observations);
    const std::size_t k = g.competitors.size();
    RankTable t;
    t.competitors = g.competitors;
    t.mean_rank.assign(k, 0.0);
    t.groups_used = g.rows.size();
    t.groups_skipped = g.skipped;
    std::vector<std::vector<double>> values(k);
    for (const auto& row : g.rows) {
        for (std::size_t i = 0; i < k; ++i) {
            // average rank: 1 + #smaller + (#equal − 1)/2
            double less = 0.0, equal = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                if (row[j] < row[i]) less += 1.0;
                else if (row[j] == row[i]) equal += 1.0;
            }
            t.mean_rank[i] += 1.0 + less + (equal - 1.0) / 2.0;
            values[i].push_back(row[i]);
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        t.mean_rank[i] /= static_cast<double>(g.rows.size());
        t.median_value.push_back(median(values[i]));
    }
    return t;
}

WinLossTable pairwise_winloss(std::span<const Observation> observations) {
    const Grouped g = group_observations(observations);
    const std::size_t k = g.competitors.size();
    WinLossTable t;
    t.competitors = g.competitors;
    t.win_ratio = Matrix(k, k);
    t.ties = Matrix(k, k);
    t.groups = g.rows.size();
    for (const auto& row : g.rows)
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                if (i == j) continue;
                if (row[i] < row[j]) t.win_ratio(i, j) += 1.0;
                else if (row[i] == row[j]) t.ties(i, j) += 1.0;
            }
    t.win_ratio *= 1.0 / static_cast<double>(t.groups);
    return t;
}

CorrelationReport feature_correlation(const Matrix& x) {
    if (x.rows() < 2) throw ContractError("feature_correlation: need at least two rows");
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) mean[j] += x(i, j);
        mean[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) sd[j] += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
        sd[j] = std::sqrt(sd[j]);
    }
    CorrelationReport r;
    r.correlation = Matrix(d, d);
    r.zero_variance.resize(d);
    for (std::size_t j = 0; j < d; ++j) r.zero_variance[j] = sd[j] == 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        r.correlation(a, a) = 1.0;
        for (std::size_t b = a + 1; b < d; ++b) {
            double c = 0.0;
            if (!r.zero_variance[a] && !r.zero_variance[b]) {
                for (std::size_t i = 0; i < n; ++i) c += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
                c = std::clamp(c / (sd[a] * sd[b]), -1.0, 1.0);
            }
            r.correlation(a, b) = r.correlation(b, a) = c;
        }
    }
    return r;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ContractError("median of an empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

}  // namespace tabdistill::eval
