#include "tabdistill/bench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "tabdistill/bench/pipeline.hpp"
#include "tabdistill/bench/plan.hpp"
#include "tabdistill/bench/store.hpp"
#include "tabdistill/data/csv.hpp"
#include "tabdistill/distill/distilled_set.hpp"
#include "tabdistill/numerics/log.hpp"

namespace tabdistill::bench {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::filesystem::path>& written)
        : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw data::DataError("cannot write " + path.string());
        written.push_back(path);
    }
    ~CsvWriter() noexcept(false) {
        out_.flush();
        if (!out_ && std::uncaught_exceptions() == 0) throw data::DataError("write to " + path_.string() + " failed");
    }
    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << csv_field(fields[i]);
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

std::optional<double> regret_of(const eval::RegretContext& ctx, const eval::RunRecord& r) {
    if (!r.ok() || !ctx.contains(r.dataset, r.classifier)) return std::nullopt;
    try {
        return ctx.regret(r.dataset, r.classifier, r.balanced_accuracy);
    } catch (const eval::UndefinedRegretError&) {
        return std::nullopt;
    }
}

std::string group_of(const eval::RunRecord& r) {
    return r.dataset + "|" + r.classifier + "|ipc" + std::to_string(r.ipc);
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path, std::vector<std::filesystem::path>& written) {
    CsvWriter w(path, written);
    std::vector<std::string> header{"feature"};
    for (std::size_t j = 0; j < m.cols(); ++j) header.push_back("f" + std::to_string(j));
    w.row(header);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::vector<std::string> row{"f" + std::to_string(i)};
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(format_double(m(i, j)));
        w.row(row);
    }
}

Matrix load_train_matrix(const std::filesystem::path& path) {
    const auto j = nlohmann::json::parse(data::read_text_file(path));
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("features").get<std::vector<double>>());
}

double mean_abs_offdiag_diff(const Matrix& a, const Matrix& b) {
    const std::size_t d = a.rows();
    if (d < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (i != j) s += std::abs(a(i, j) - b(i, j));
    return s / static_cast<double>(d * (d - 1));
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string competitor_of(const eval::RunRecord& r) {
    return r.encoder + "/" + r.method + "/" + r.space + "/" + r.variant + "/" + r.representation;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ContractError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<std::filesystem::path> emit_reports(std::span<const eval::RunRecord> all,
                                                const std::filesystem::path& out_dir) {
    std::vector<std::filesystem::path> written;
    if (all.empty()) {
        log_warning("report: the results store is empty; nothing written");
        return written;
    }
    std::filesystem::create_directories(out_dir);
    const auto records = latest_records(all);
    const auto ctx = compute_all_contexts(records);

    {
        CsvWriter w(out_dir / "runs.csv", written);
        w.row({"dataset", "encoder", "method", "space", "variant", "representation", "ipc", "seed", "classifier",
               "status", "failed_stage", "balanced_accuracy", "relative_regret", "plan_hash", "message"});
        for (const auto& r : records) {
            const auto reg = regret_of(ctx, r);
            w.row({r.dataset, r.encoder, r.method, r.space, r.variant, r.representation, std::to_string(r.ipc),
                   std::to_string(r.seed), r.classifier, r.status, r.failed_stage,
                   r.ok() ? format_double(r.balanced_accuracy) : "", reg ? format_double(*reg) : "", r.plan_hash,
                   r.message});
        }
    }
    {
        CsvWriter w(out_dir / "timing.csv", written);
        w.row({"dataset", "encoder", "method", "space", "variant", "representation", "ipc", "seed", "classifier",
               "stage", "seconds"});
        for (const auto& r : records) {
            auto stages = r.stage_seconds;
            stages["total"] = r.seconds;
            for (const auto& [stage, s] : stages)
                w.row({r.dataset, r.encoder, r.method, r.space, r.variant, r.representation, std::to_string(r.ipc),
                       std::to_string(r.seed), r.classifier, stage, format_double(s)});
        }
    }

    // Regret samples per summary key and per (group, competitor).
    std::map<std::vector<std::string>, std::vector<double>> summary;
    std::map<std::pair<std::string, std::string>, std::vector<double>> cells;
    for (const auto& r : records) {
        if (r.method == "full") continue;
        const auto reg = regret_of(ctx, r);
        if (!reg) continue;
        summary[{r.encoder, r.method, r.space, r.variant, r.representation, std::to_string(r.ipc)}].push_back(*reg);
        cells[{group_of(r), competitor_of(r)}].push_back(*reg);
    }
    {
        CsvWriter w(out_dir / "regret_summary.csv", written);
        w.row({"encoder", "method", "space", "variant", "representation", "ipc", "count", "median", "q1", "q3"});
        for (const auto& [key, values] : summary) {
            auto row = key;
            row.push_back(std::to_string(values.size()));
            row.push_back(format_double(eval::median(values)));
            row.push_back(format_double(quantile(values, 0.25)));
            row.push_back(format_double(quantile(values, 0.75)));
            w.row(row);
        }
    }

    std::set<std::string> groups;
    std::map<std::string, std::set<std::string>> groups_of;
    for (const auto& [key, v] : cells) {
        groups.insert(key.first);
        groups_of[key.second].insert(key.first);
    }
    std::vector<eval::Observation> observations;
    std::map<std::string, std::vector<double>> pooled;
    std::vector<std::string> dropped;
    for (const auto& [competitor, in] : groups_of)
        if (in.size() != groups.size()) dropped.push_back(competitor);
    if (!dropped.empty()) {
        std::string names;
        for (const auto& d : dropped) names += (names.empty() ? "" : ", ") + d;
        log_warning("report: competitors missing from some groups are not ranked: " + names);
    }
    for (const auto& [key, values] : cells) {
        if (std::find(dropped.begin(), dropped.end(), key.second) != dropped.end()) continue;
        observations.push_back({key.first, key.second, eval::median(values)});
        auto& p = pooled[key.second];
        p.insert(p.end(), values.begin(), values.end());
    }

    std::optional<eval::RankTable> ranks;
    if (observations.empty()) {
        log_warning("report: no regret values to rank");
    } else {
        ranks = eval::mean_rank(observations);
        CsvWriter w(out_dir / "ranks.csv", written);
        w.row({"competitor", "mean_rank", "median_regret", "groups_used", "groups_skipped"});
        for (std::size_t i = 0; i < ranks->competitors.size(); ++i)
            w.row({ranks->competitors[i], format_double(ranks->mean_rank[i]),
                   format_double(eval::median(pooled[ranks->competitors[i]])), std::to_string(ranks->groups_used),
                   std::to_string(ranks->groups_skipped)});

        const auto wl = eval::pairwise_winloss(observations);
        CsvWriter v(out_dir / "winloss.csv", written);
        v.row({"competitor", "opponent", "win_ratio", "ties", "groups"});
        for (std::size_t i = 0; i < wl.competitors.size(); ++i)
            for (std::size_t j = 0; j < wl.competitors.size(); ++j) {
                if (i == j) continue;
                v.row({wl.competitors[i], wl.competitors[j], format_double(wl.win_ratio(i, j)),
                       std::to_string(static_cast<long long>(wl.ties(i, j))), std::to_string(wl.groups)});
            }
    }

    // Feature correlation of the training data, random@10 and the best
    // ranked non-random competitor in binary width.
    std::string best;
    if (ranks) {
        double best_rank = 0.0;
        for (std::size_t i = 0; i < ranks->competitors.size(); ++i) {
            const auto& c = ranks->competitors[i];
            const bool binary = c.ends_with("/original") || c.ends_with("/decoded");
            if (!binary || c.find("/random/") != std::string::npos) continue;
            if (best.empty() || ranks->mean_rank[i] < best_rank) {
                best = c;
                best_rank = ranks->mean_rank[i];
            }
        }
    }
    std::set<std::string> datasets;
    for (const auto& r : records) datasets.insert(r.dataset);
    std::vector<std::vector<std::string>> corr_rows;
    for (const auto& ds : datasets) {
        const auto dir = out_dir / "sets" / ds;
        if (!std::filesystem::exists(dir / "train.json")) continue;
        const auto original = eval::feature_correlation(load_train_matrix(dir / "train.json")).correlation;
        write_matrix_csv(original, out_dir / ("correlation_" + ds + "_original.csv"), written);

        const auto find_set = [&](auto&& match) -> std::optional<std::filesystem::path> {
            std::vector<const eval::RunRecord*> hits;
            for (const auto& r : records)
                if (r.ok() && r.dataset == ds && match(r)) hits.push_back(&r);
            std::stable_sort(hits.begin(), hits.end(), [](const auto* a, const auto* b) {
                const bool a10 = a->ipc == kBaselineIpc, b10 = b->ipc == kBaselineIpc;
                if (a10 != b10) return a10;
                return std::tie(a->ipc, a->seed) < std::tie(b->ipc, b->seed);
            });
            for (const auto* r : hits)
                if (std::filesystem::exists(dir / set_file_name(*r))) return dir / set_file_name(*r);
            return std::nullopt;
        };
        const std::pair<std::string, std::string> picks[] = {{"random", "none/random/original/as-is/original"},
                                                             {"best", best}};
        for (const auto& [which, competitor] : picks) {
            if (competitor.empty()) continue;
            const auto file = find_set([&](const eval::RunRecord& r) {
                return competitor_of(r) == competitor && (which != "random" || r.ipc == kBaselineIpc);
            });
            if (!file) {
                log_warning("report: no saved set for " + competitor + " on '" + ds + "'");
                continue;
            }
            const auto set = distill::DistilledSet::load(*file);
            if (set.features.rows() < 2 || set.features.cols() != original.cols()) continue;
            const auto c = eval::feature_correlation(set.features).correlation;
            write_matrix_csv(c, out_dir / ("correlation_" + ds + "_" + which + ".csv"), written);
            corr_rows.push_back({ds, which, competitor, file->filename().string(),
                                 format_double(mean_abs_offdiag_diff(c, original))});
        }
    }
    if (!corr_rows.empty()) {
        CsvWriter w(out_dir / "correlation_summary.csv", written);
        w.row({"dataset", "which", "competitor", "set_file", "mean_abs_diff_vs_original"});
        for (const auto& row : corr_rows) w.row(row);
    }
    return written;
}

}  // namespace tabdistill::bench
