#include "tabdistill/bench/store.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include "tabdistill/bench/plan.hpp"
#include "tabdistill/data/csv.hpp"
#include "tabdistill/numerics/log.hpp"

namespace tabdistill::bench {

ResultsStore::ResultsStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

void ResultsStore::append(const eval::RunRecord& record) {
    const std::string line = record.to_json().dump() + "\n";
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(records_path(), std::ios::app | std::ios::binary);
    if (!out) throw data::DataError("cannot open " + records_path().string() + " for appending");
    out << line;
    out.flush();
    if (!out) throw data::DataError("write to " + records_path().string() + " failed");
}

std::vector<eval::RunRecord> ResultsStore::load() const {
    std::vector<eval::RunRecord> out;
    if (!std::filesystem::exists(records_path())) return out;
    std::ifstream in(records_path(), std::ios::binary);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        try {
            out.push_back(eval::RunRecord::from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw data::DataError(records_path().string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return out;
}

std::string record_key(const eval::RunRecord& r) {
    return r.dataset + "|" + r.encoder + "|" + r.method + "|" + r.space + "|" + r.variant + "|" +
           r.representation + "|" + std::to_string(r.ipc) + "|" + std::to_string(r.seed) + "|" + r.classifier;
}

std::vector<eval::RunRecord> latest_records(std::span<const eval::RunRecord> records) {
    std::map<std::string, const eval::RunRecord*> last;
    for (const auto& r : records) last[record_key(r)] = &r;
    std::vector<eval::RunRecord> out;
    out.reserve(last.size());
    for (const auto& [key, r] : last) out.push_back(*r);
    return out;
}

eval::Baseline compute_baseline(std::span<const eval::RunRecord> records, const std::string& dataset,
                                const std::string& classifier) {
    std::optional<double> full;
    std::map<std::uint64_t, double> random;
    for (const auto& r : latest_records(records)) {
        if (!r.ok() || r.dataset != dataset || r.classifier != classifier || r.encoder != "none") continue;
        if (r.method == "full") full = r.balanced_accuracy;
        else if (r.method == "random" && r.space == "original" && r.variant == "as-is" &&
                   r.representation == "original" && r.ipc == kBaselineIpc) {
            random.emplace(r.seed, r.balanced_accuracy);
        }
    }
    std::string missing;
    if (!full) missing += "the full-data run";
    if (random.size() < 5) {
        if (!missing.empty()) missing += " and ";
        missing += "5 random@10 runs (found " + std::to_string(random.size()) + ")";
    }
    if (!missing.empty())
        throw MissingBaselineError("missing baselines for dataset '" + dataset + "', classifier '" + classifier +
                                   "': need " + missing + "; run the 'baselines' command");
    eval::Baseline b;
    b.full = *full;
    double sum = 0.0;
    auto it = random.begin();
    for (int i = 0; i < 5; ++i, ++it) sum += it->second;
    b.random10 = sum / 5.0;
    return b;
}

eval::RegretContext compute_context(std::span<const eval::RunRecord> records, const std::string& dataset,
                                    const std::string& classifier) {
    eval::RegretContext ctx;
    ctx.set(dataset, classifier, compute_baseline(records, dataset, classifier));
    return ctx;
}

eval::RegretContext compute_all_contexts(std::span<const eval::RunRecord> records) {
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& r : records)
        if (r.ok()) pairs.insert({r.dataset, r.classifier});
    eval::RegretContext ctx;
    for (const auto& [d, c] : pairs) {
        try {
            ctx.set(d, c, compute_baseline(records, d, c));
        } catch (const MissingBaselineError& e) {
            log_warning(e.what());
        }
    }
    return ctx;
}

}  // namespace tabdistill::bench
